//! Command dispatch and report types for the `slocc` binary.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use slocc_core::algebra::GeneratorDump;
use slocc_core::critical::DEFAULT_SEED;
use slocc_core::polytope::{default_denominator, rational_to_string, registered_predicate};
use slocc_core::{
    analyze_point, casimir_constant, catalog, classify_system, enumerate_candidates, expectation_norm_sq,
    gell_mann_basis, hessian_fd_check, is_critical, is_zero_momentum, momentum, momentum_norm_sq, morse_index,
    spectrum_point, total_variance, verify_all, Branch, CriticalPoint, Fingerprint, PureState, SearchOptions,
    SpectrumPoint, StateFile, SystemDescriptor,
};

pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "SLOCC_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] slocc_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_internal() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Search,
    Critical,
    Polytope,
    Verify,
    DumpGenerators,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub criticality: f64,
    pub solver: f64,
    pub index: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = SearchOptions::default();
        Tolerances { criticality: d.criticality_tol, solver: d.tol, index: d.index_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PolytopeQuery {
    Test { point: String },
    Enumerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// `kind,N,L`; required by search, polytope and dump-generators.
    pub system: Option<String>,
    pub input_path: Option<PathBuf>,
    pub denominator: Option<i64>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub starts: usize,
    pub max_iter: usize,
    pub fd_check: bool,
    pub sequential: bool,
    pub polytope: Option<PolytopeQuery>,
    pub output: OutputFormat,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let d = SearchOptions::default();
        RunConfig {
            command,
            system: None,
            input_path: None,
            denominator: None,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            starts: d.starts,
            max_iter: d.max_iter,
            fd_check: false,
            sequential: false,
            polytope: None,
            output: OutputFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("criticality", t.criticality), ("solver", t.solver), ("index", t.index)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!("{name} tolerance must be positive, got {v}")));
            }
        }
        if let Some(d) = self.denominator {
            if d < 2 {
                return Err(CliError::Usage(format!("denominator must be at least 2, got {d}")));
            }
        }
        if self.starts == 0 {
            return Err(CliError::Usage("starts must be at least 1".into()));
        }
        Ok(())
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions {
            starts: self.starts,
            max_iter: self.max_iter,
            tol: self.tolerances.solver,
            seed: self.seed,
            criticality_tol: self.tolerances.criticality,
            index_tol: self.tolerances.index,
            parallel: !self.sequential,
            fd_directions: if self.fd_check { 16 } else { 0 },
            ..SearchOptions::default()
        }
    }

    fn descriptor(&self) -> Result<SystemDescriptor, CliError> {
        let text = self.system.as_deref().ok_or_else(|| CliError::Usage("--system is required".into()))?;
        Ok(text.parse::<SystemDescriptor>()?)
    }

    fn state(&self) -> Result<PureState, CliError> {
        let path = self.input_path.as_ref().ok_or_else(|| CliError::Usage("--state is required".into()))?;
        parse_state_file(path)
    }
}

pub fn parse_state_file(path: &std::path::Path) -> Result<PureState, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    Ok(file.to_state()?)
}

/// Exact values mirrored as `p/q` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rationals {
    pub lambda: String,
    pub var: String,
    pub momentum_norm_sq: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub label: Option<String>,
    pub branch: Branch,
    pub lambda: f64,
    pub var: f64,
    pub casimir: f64,
    pub momentum_norm_sq: f64,
    pub spectra: SpectrumPoint,
    pub spectra_float: Vec<Vec<f64>>,
    pub candidate: Option<SpectrumPoint>,
    pub morse_index: u32,
    pub marginal_directions: u32,
    pub residual: f64,
    pub rationals: Option<Rationals>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian_fd_max_dev: Option<f64>,
    pub state: StateFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub label: Option<String>,
    pub var: f64,
    pub casimir: f64,
    pub momentum_norm_sq: f64,
    pub expectation_norm_sq: f64,
    pub spectra: Vec<Vec<f64>>,
    pub spectrum_point: SpectrumPoint,
    pub is_zero_momentum: bool,
    pub critical: bool,
    pub lambda: f64,
    pub residual: f64,
    pub morse_index: Option<u32>,
    pub marginal_directions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian_fd_max_dev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    CriticalPoint(Box<CriticalPointRecord>),
    Analysis(Box<AnalysisRecord>),
    Criticality { critical: bool, lambda: f64, residual: f64 },
    Membership { point: SpectrumPoint, member: bool },
    Candidate { point: SpectrumPoint },
    Generators { local_dim: usize, generators: Vec<Vec<Vec<ComplexEntry>>> },
    Property { name: String, passed: bool, max_deviation: f64, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub results: Vec<Record>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Catalogued critical points of `desc`, keyed by fingerprint.
fn catalog_labels(desc: SystemDescriptor, denominator: i64, opts: &SearchOptions) -> Vec<(&'static str, Fingerprint)> {
    let opts = SearchOptions { fd_directions: 0, ..opts.clone() };
    catalog::example_critical_points()
        .into_iter()
        .filter(|(_, psi, _)| psi.descriptor() == desc)
        .filter_map(|(name, psi, _)| {
            analyze_point(&psi, Branch::Sweep, None, denominator, &opts).ok().map(|p| (name, p.fingerprint()))
        })
        .collect()
}

fn label_of(labels: &[(&'static str, Fingerprint)], fp: &Fingerprint) -> Option<String> {
    labels.iter().find(|(_, f)| f == fp).map(|(name, _)| name.to_string())
}

fn critical_record(p: &CriticalPoint, label: Option<String>) -> Result<CriticalPointRecord, CliError> {
    let rationals = p.exact_values().map(|e| Rationals {
        lambda: rational_to_string(&e.lambda),
        var: rational_to_string(&e.variance),
        momentum_norm_sq: rational_to_string(&e.momentum_norm_sq),
    });
    Ok(CriticalPointRecord {
        label,
        branch: p.branch,
        lambda: p.lambda,
        var: p.variance,
        casimir: casimir_constant(p.state.descriptor())?,
        momentum_norm_sq: p.momentum_norm_sq,
        spectra: p.spectrum.clone(),
        spectra_float: p.float_spectra.clone(),
        candidate: p.candidate.clone(),
        morse_index: p.morse_index,
        marginal_directions: p.marginal_directions,
        residual: p.residual,
        rationals,
        hessian_fd_max_dev: p.fd_deviation,
        state: StateFile::from_state(&p.state),
    })
}

fn search(config: &RunConfig) -> Result<(Vec<Record>, Vec<String>), CliError> {
    let desc = config.descriptor()?;
    let opts = config.search_options();
    let classification = classify_system(desc, config.denominator, &opts)?;
    let labels = catalog_labels(desc, classification.denominator, &opts);
    let mut warnings = classification.warnings.clone();
    if classification.points.is_empty() {
        warnings.push(format!("no critical points found on the grid with denominator {}", classification.denominator));
    }
    if !classification.points.iter().any(|p| p.branch == Branch::ZeroMomentum) {
        warnings.push("zero-momentum branch: empty".into());
    }
    let results = classification
        .points
        .iter()
        .map(|p| Ok(Record::CriticalPoint(Box::new(critical_record(p, label_of(&labels, &p.fingerprint()))?))))
        .collect::<Result<_, CliError>>()?;
    Ok((results, warnings))
}

fn analyze(config: &RunConfig) -> Result<(Vec<Record>, Vec<String>), CliError> {
    let psi = config.state()?;
    let desc = psi.descriptor();
    let opts = config.search_options();
    let denominator = config.denominator.unwrap_or_else(|| default_denominator(desc.local_dim()));
    let mut warnings = Vec::new();
    let crit = is_critical(&psi, opts.criticality_tol);
    let est = spectrum_point(&psi, denominator)?;
    if est.off_lattice {
        warnings.push(format!(
            "spectrum is not near a lattice point of denominator {denominator} (max shift {:.3e})",
            est.max_shift
        ));
    }
    let (morse, marginal, label) = if crit.critical {
        let m = morse_index(&psi, crit.lambda, opts.rank_tol, opts.index_tol)?;
        if m.marginal_directions > 0 {
            warnings.push(format!("{} marginal Hessian direction(s)", m.marginal_directions));
        }
        let point = analyze_point(&psi, Branch::Sweep, None, denominator, &SearchOptions { fd_directions: 0, ..opts.clone() })?;
        let label = label_of(&catalog_labels(desc, denominator, &opts), &point.fingerprint());
        (Some(m.index), Some(m.marginal_directions), label)
    } else {
        (None, None, None)
    };
    let fd = if config.fd_check && crit.critical { Some(hessian_fd_check(&psi, 16, 1e-4, config.seed)?) } else { None };
    let record = AnalysisRecord {
        label,
        var: total_variance(&psi)?,
        casimir: casimir_constant(desc)?,
        momentum_norm_sq: momentum_norm_sq(&psi)?,
        expectation_norm_sq: expectation_norm_sq(&psi),
        spectra: momentum(&psi).spectra(),
        spectrum_point: est.point,
        is_zero_momentum: is_zero_momentum(&psi, opts.criticality_tol),
        critical: crit.critical,
        lambda: crit.lambda,
        residual: crit.residual,
        morse_index: morse,
        marginal_directions: marginal,
        hessian_fd_max_dev: fd,
    };
    Ok((vec![Record::Analysis(Box::new(record))], warnings))
}

fn polytope(config: &RunConfig) -> Result<(Vec<Record>, Vec<String>), CliError> {
    let desc = config.descriptor()?;
    let query = config.polytope.clone().ok_or_else(|| CliError::Usage("polytope needs --test or --enumerate".into()))?;
    match query {
        PolytopeQuery::Test { point } => {
            let point = SpectrumPoint::parse(desc, &point)?;
            let predicate = registered_predicate(desc)
                .ok_or_else(|| CliError::Core(slocc_core::Error::NoPredicate(desc.to_string())))?;
            let member = predicate(&point);
            Ok((vec![Record::Membership { point, member }], Vec::new()))
        }
        PolytopeQuery::Enumerate => {
            let den = config.denominator.unwrap_or_else(|| default_denominator(desc.local_dim()));
            let points = enumerate_candidates(desc, den, None)?;
            let mut warnings = Vec::new();
            if points.is_empty() {
                warnings.push(format!("no candidates at denominator {den}"));
            }
            Ok((points.into_iter().map(|point| Record::Candidate { point }).collect(), warnings))
        }
    }
}

fn dump_generators(config: &RunConfig) -> Result<(Vec<Record>, Vec<String>), CliError> {
    let desc = config.descriptor()?;
    let dump = GeneratorDump::from(&gell_mann_basis(desc.local_dim())?);
    let generators = dump
        .generators
        .into_iter()
        .map(|m| m.into_iter().map(|row| row.into_iter().map(|z| ComplexEntry { re: z.re, im: z.im }).collect()).collect())
        .collect();
    Ok((vec![Record::Generators { local_dim: dump.local_dim, generators }], Vec::new()))
}

/// Executes a command. Malformed input and internal errors are returned as
/// `Err`; a failed verification property yields a report with exit code 3.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let mut exit_code = 0;
    let (results, warnings) = match config.command {
        Command::Search => search(config)?,
        Command::Analyze => analyze(config)?,
        Command::Critical => {
            let psi = config.state()?;
            let c = is_critical(&psi, config.tolerances.criticality);
            (vec![Record::Criticality { critical: c.critical, lambda: c.lambda, residual: c.residual }], Vec::new())
        }
        Command::Polytope => polytope(config)?,
        Command::Verify => {
            let outcomes = verify_all(config.seed)?;
            if outcomes.iter().any(|o| !o.passed) {
                exit_code = 3;
            }
            let records = outcomes
                .into_iter()
                .map(|o| Record::Property {
                    name: o.name.to_string(),
                    passed: o.passed,
                    max_deviation: o.max_deviation,
                    detail: o.detail,
                })
                .collect();
            (records, Vec::new())
        }
        Command::DumpGenerators => dump_generators(config)?,
    };
    Ok(Outcome { report: Report { version: VERSION.to_string(), config: config.clone(), results, warnings }, exit_code })
}

fn fmt_spectra(p: &SpectrumPoint) -> String {
    p.to_string()
}

/// Human-readable rendering; classes are listed in descending Var.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let mut table_header = false;
    for record in &report.results {
        match record {
            Record::CriticalPoint(p) => {
                if !table_header {
                    let _ = writeln!(out, "{:<6} {:>12} {:>6} {:>12}  spectra", "class", "Var", "index", "lambda");
                    table_header = true;
                }
                let label = p.label.as_deref().map(pretty_label).unwrap_or("-");
                let var = p.rationals.as_ref().map_or(format!("{:.9}", p.var), |r| r.var.clone());
                let lambda = p.rationals.as_ref().map_or(format!("{:.9}", p.lambda), |r| r.lambda.clone());
                let _ = writeln!(out, "{label:<6} {var:>12} {:>6} {lambda:>12}  {}", p.morse_index, fmt_spectra(&p.spectra));
            }
            Record::Analysis(a) => {
                if let Some(l) = &a.label {
                    let _ = writeln!(out, "class: {}", pretty_label(l));
                }
                let _ = writeln!(out, "Var: {:.12}  (c = {:.12})", a.var, a.casimir);
                let _ = writeln!(out, "||mu||^2: {:.12}", a.momentum_norm_sq);
                let _ = writeln!(out, "spectra: {}", a.spectrum_point);
                let _ = writeln!(out, "zero momentum: {}", a.is_zero_momentum);
                let _ = writeln!(out, "critical: {} (lambda = {:.12}, residual = {:.3e})", a.critical, a.lambda, a.residual);
                if let Some(i) = a.morse_index {
                    let _ = writeln!(out, "Morse index: {i}");
                }
                if let Some(d) = a.hessian_fd_max_dev {
                    let _ = writeln!(out, "Hessian finite-difference deviation: {d:.3e}");
                }
            }
            Record::Criticality { critical, lambda, residual } => {
                let _ = writeln!(out, "critical: {critical}\nlambda: {lambda:.12}\nresidual: {residual:.3e}");
            }
            Record::Membership { point, member } => {
                let _ = writeln!(out, "{point}: {}", if *member { "inside" } else { "outside" });
            }
            Record::Candidate { point } => {
                let _ = writeln!(out, "{point}");
            }
            Record::Generators { local_dim, generators } => {
                let _ = writeln!(out, "{} generators of su({local_dim})", generators.len());
                for (k, g) in generators.iter().enumerate() {
                    let _ = writeln!(out, "X{}:", k + 1);
                    for row in g {
                        let cells: Vec<String> = row.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
                        let _ = writeln!(out, "  {}", cells.join("  "));
                    }
                }
            }
            Record::Property { name, passed, max_deviation, detail } => {
                let _ = writeln!(
                    out,
                    "{} {name:<28} max dev {max_deviation:.3e}  {detail}",
                    if *passed { "PASS" } else { "FAIL" }
                );
            }
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn pretty_label(name: &str) -> &str {
    match name {
        "psi1" => "ψ₁",
        "psi2" => "ψ₂",
        other => other,
    }
}
