use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use slocc_cli::{render_text, run, Command, OutputFormat, PolytopeQuery, RunConfig, REPORT_SCHEMA, SEED_ENV};
use slocc_core::critical::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "slocc", version, about = "Critical points of the total variance and SLOCC classes of pure states")]
struct Cli {
    /// Print the JSON schema of the report and exit.
    #[arg(long)]
    schema: bool,

    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Criticality tolerance on ‖(α − λ)ψ‖/‖ψ‖.
    #[arg(long)]
    criticality_tol: Option<f64>,
    /// Hessian eigenvalues within this tolerance of zero are marginal.
    #[arg(long)]
    index_tol: Option<f64>,
    /// Run the Hessian finite-difference check on every critical point.
    #[arg(long)]
    fd_check: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Var, momentum map, criticality and Morse index of a state file.
    Analyze {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        denominator: Option<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the polytope grid for critical points.
    Search {
        /// System as kind,N,L (e.g. distinguishable,2,3).
        #[arg(long)]
        system: String,
        #[arg(long)]
        denominator: Option<i64>,
        #[arg(long)]
        starts: Option<usize>,
        /// Solver tolerance on ‖μ(ψ) − α_P‖.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Run on the calling thread only.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Whether a state is an eigenvector of its own momentum operator.
    Critical {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Membership test or candidate enumeration for the momentum polytope.
    Polytope {
        #[arg(long)]
        system: String,
        /// Spectrum point as rationals, parts separated by ';' (e.g. "1/6,-1/6;1/6,-1/6;1/6,-1/6").
        #[arg(long, conflicts_with = "enumerate")]
        test: Option<String>,
        #[arg(long)]
        enumerate: bool,
        #[arg(long)]
        denominator: Option<i64>,
    },
    /// Run the built-in property suites.
    Verify {
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
    },
    /// Print the su(N) generators as JSON.
    DumpGenerators {
        /// System as kind,N,L; only N matters.
        #[arg(long)]
        system: String,
    },
}

fn apply_common(config: &mut RunConfig, common: Common) {
    config.seed = common.seed.unwrap_or(DEFAULT_SEED);
    if let Some(t) = common.criticality_tol {
        config.tolerances.criticality = t;
    }
    if let Some(t) = common.index_tol {
        config.tolerances.index = t;
    }
    config.fd_check = common.fd_check;
}

fn build_config(sub: Sub) -> RunConfig {
    match sub {
        Sub::Analyze { state, denominator, common } => {
            let mut c = RunConfig::new(Command::Analyze);
            c.input_path = Some(state);
            c.denominator = denominator;
            apply_common(&mut c, common);
            c
        }
        Sub::Search { system, denominator, starts, tol, max_iter, sequential, common } => {
            let mut c = RunConfig::new(Command::Search);
            c.system = Some(system);
            c.denominator = denominator;
            if let Some(s) = starts {
                c.starts = s;
            }
            if let Some(t) = tol {
                c.tolerances.solver = t;
            }
            if let Some(m) = max_iter {
                c.max_iter = m;
            }
            c.sequential = sequential;
            apply_common(&mut c, common);
            c
        }
        Sub::Critical { state, tol } => {
            let mut c = RunConfig::new(Command::Critical);
            c.input_path = Some(state);
            if let Some(t) = tol {
                c.tolerances.criticality = t;
            }
            c
        }
        Sub::Polytope { system, test, enumerate, denominator } => {
            let mut c = RunConfig::new(Command::Polytope);
            c.system = Some(system);
            c.denominator = denominator;
            c.polytope = match (test, enumerate) {
                (Some(point), _) => Some(PolytopeQuery::Test { point }),
                (None, true) => Some(PolytopeQuery::Enumerate),
                (None, false) => None,
            };
            c
        }
        Sub::Verify { seed } => {
            let mut c = RunConfig::new(Command::Verify);
            c.seed = seed.unwrap_or(DEFAULT_SEED);
            c
        }
        Sub::DumpGenerators { system } => {
            let mut c = RunConfig::new(Command::DumpGenerators);
            c.system = Some(system);
            c
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.schema {
        let _ = std::io::stdout().lock().write_all(REPORT_SCHEMA.as_bytes());
        return ExitCode::SUCCESS;
    }
    let Some(sub) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let mut config = build_config(sub);
    config.output = match cli.format {
        Format::Json => OutputFormat::Json,
        Format::Text => OutputFormat::Text,
    };
    match run(&config) {
        Ok(outcome) => {
            let text = match config.output {
                OutputFormat::Json => outcome.report.to_json() + "\n",
                OutputFormat::Text => render_text(&outcome.report),
            };
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
