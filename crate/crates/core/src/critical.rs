//! Criticality test, the polytope sweep and classification of critical points.
//!
//! For a candidate spectrum point `P`, `α_P` is diagonal in the canonical
//! basis. A state whose momentum equals `diag(P)` and which lies in a single
//! eigenspace of `α_P` is an eigenvector of its own momentum operator, i.e. a
//! critical point of the total variance. The sweep therefore minimizes
//! `‖μ(ψ) − diag(P)‖²` over the unit sphere of each eigenspace.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SVD};
use num_rational::Rational64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::casimir_rational;
use crate::linalg::{self, c, CMat, CVec, ZERO};
use crate::momentum::{
    momentum, momentum_norm_sq, momentum_operator, momentum_raw, one_body_cross, total_variance, MomentumValue,
};
use crate::morse::{hessian_fd_check, morse_index, DEFAULT_INDEX_TOL, DEFAULT_RANK_TOL};
use crate::polytope::{default_denominator, enumerate_candidates, spectrum_point, MembershipPredicate, SpectrumPoint};
use crate::system::{Basis, ParticleKind, SystemDescriptor};
use crate::{Error, PureState, Result};

pub const DEFAULT_SEED: u64 = 0x5eed_c0ffee;
pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SearchOptions {
    /// Random starting points per eigenspace.
    pub starts: usize,
    pub max_iter: usize,
    /// Initial step of the projected gradient descent.
    pub step: f64,
    /// A solution must satisfy `‖μ(ψ) − diag(P)‖ < tol`.
    pub tol: f64,
    pub seed: u64,
    pub criticality_tol: f64,
    pub index_tol: f64,
    pub rank_tol: f64,
    pub parallel: bool,
    /// Random directions for the Hessian finite-difference check; 0 disables it.
    pub fd_directions: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            starts: 32,
            max_iter: 2000,
            step: 0.5,
            tol: 1e-8,
            seed: DEFAULT_SEED,
            criticality_tol: DEFAULT_CRITICALITY_TOL,
            index_tol: DEFAULT_INDEX_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            parallel: true,
            fd_directions: 0,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Malformed { field: field.into(), reason: "must be a positive number".into() })
            }
        };
        positive("step", self.step)?;
        positive("tol", self.tol)?;
        positive("criticality_tol", self.criticality_tol)?;
        positive("index_tol", self.index_tol)?;
        positive("rank_tol", self.rank_tol)?;
        if self.starts == 0 {
            return Err(Error::Malformed { field: "starts".into(), reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// `α_P = Σ_k diag(P_k)` lifted to the system space; diagonal in the canonical basis.
#[derive(Debug, Clone)]
pub struct AlphaOperator {
    descriptor: SystemDescriptor,
    point: SpectrumPoint,
    diagonal: Vec<Rational64>,
}

impl AlphaOperator {
    pub fn descriptor(&self) -> SystemDescriptor {
        self.descriptor
    }

    pub fn point(&self) -> &SpectrumPoint {
        &self.point
    }

    pub fn diagonal(&self) -> &[Rational64] {
        &self.diagonal
    }

    /// `diag(P_k)` as momentum components.
    pub fn target(&self) -> MomentumValue {
        MomentumValue::new(
            self.point
                .to_f64()
                .iter()
                .map(|p| CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0)))))
                .collect(),
        )
    }
}

pub fn build_alpha(point: &SpectrumPoint, descriptor: SystemDescriptor) -> Result<AlphaOperator> {
    point.check_shape(descriptor)?;
    let basis = descriptor.basis();
    let parts = point.parts();
    let diagonal = basis
        .indices()
        .iter()
        .map(|idx| match descriptor.kind() {
            ParticleKind::Distinguishable => {
                idx.orbitals().iter().enumerate().map(|(k, &o)| parts[k][o]).fold(Rational64::zero(), |a, b| a + b)
            }
            _ => idx.orbitals().iter().map(|&o| parts[0][o]).fold(Rational64::zero(), |a, b| a + b),
        })
        .collect();
    Ok(AlphaOperator { descriptor, point: point.clone(), diagonal })
}

/// Basis positions sharing one exact diagonal value of `α_P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eigenspace {
    pub value: Rational64,
    pub positions: Vec<usize>,
}

impl Eigenspace {
    pub fn dim(&self) -> usize {
        self.positions.len()
    }
}

/// Eigenspaces of `α_P` in descending order of eigenvalue.
pub fn eigenspaces(alpha: &AlphaOperator) -> Vec<Eigenspace> {
    let mut values: Vec<Rational64> = alpha.diagonal.clone();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values.dedup();
    values
        .into_iter()
        .map(|value| Eigenspace {
            value,
            positions: (0..alpha.diagonal.len()).filter(|&i| alpha.diagonal[i] == value).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Criticality {
    pub critical: bool,
    /// Rayleigh quotient of the momentum operator at ψ.
    pub lambda: f64,
    /// `‖(α − λ)ψ‖ / ‖ψ‖`.
    pub residual: f64,
}

pub fn is_critical(psi: &PureState, tol: f64) -> Criticality {
    let alpha = momentum_operator(&momentum(psi), psi.descriptor()).expect("momentum has the system's shape");
    let v = psi.amplitudes();
    let image = alpha.apply(v);
    let lambda = v.dotc(&image).re / v.norm_squared();
    let residual = (image - v.scale(lambda)).norm() / v.norm();
    Criticality { critical: residual < tol, lambda, residual }
}

pub fn is_zero_momentum(psi: &PureState, tol: f64) -> bool {
    momentum(psi).norm_sq().sqrt() < tol
}

/// Rotates ψ by local unitaries so that every reduced density is diagonal with
/// non-increasing entries. Returns the rotated state and the unitaries applied.
pub fn standardize(psi: &PureState) -> Result<(PureState, Vec<CMat>)> {
    let m = momentum(psi);
    let unitaries: Vec<CMat> = m
        .components()
        .iter()
        .map(|comp| {
            let (_, vecs) = linalg::hermitian_eigen(comp);
            // ascending order from the solver; reverse for non-increasing
            let n = vecs.ncols();
            let desc = CMat::from_fn(n, n, |r, k| vecs[(r, n - 1 - k)]);
            desc.adjoint()
        })
        .collect();
    let rotated = psi.apply_local(&unitaries)?;
    Ok((rotated, unitaries))
}

/// `‖μ(ψ) − T‖²` restricted to the span of a set of basis vectors.
struct Objective<'a> {
    basis: &'a Basis,
    positions: &'a [usize],
    target: Vec<CMat>,
    weight: f64,
}

impl<'a> Objective<'a> {
    fn new(basis: &'a Basis, positions: &'a [usize], target: &MomentumValue) -> Self {
        Objective {
            basis,
            positions,
            target: target.components().to_vec(),
            weight: basis.descriptor().expectation_weight(),
        }
    }

    fn embed(&self, x: &CVec) -> CVec {
        let mut full = CVec::zeros(self.basis.len());
        for (k, &p) in self.positions.iter().enumerate() {
            full[p] = x[k];
        }
        full
    }

    fn deviation(&self, x: &CVec) -> Vec<CMat> {
        momentum_raw(self.basis, &self.embed(x)).into_iter().zip(&self.target).map(|(m, t)| m - t).collect()
    }

    fn value(&self, x: &CVec) -> f64 {
        self.deviation(x).iter().map(linalg::hs_norm_sq).sum()
    }

    /// Riemannian gradient on the unit sphere (x must be a unit vector),
    /// as a complex vector paired with the real inner product `Re<·,·>`.
    fn gradient(&self, x: &CVec) -> (f64, CVec) {
        let dev = self.deviation(x);
        let value = dev.iter().map(linalg::hs_norm_sq).sum();
        let full = crate::state::apply_algebra_vec(self.basis, &self.embed(x), &dev).expect("shape checked");
        let scale = 4.0 / self.weight;
        let mut g = CVec::from_iterator(x.len(), self.positions.iter().map(|&p| full[p] * scale));
        let radial = x.dotc(&g).re;
        g -= x.scale(radial);
        (value, g)
    }

    /// Real residual of `ρ̃(x) − (I/N + T)` for the unnormalized density; its
    /// trace forces `‖x‖ = 1` at a zero.
    fn residual(&self, x: &CVec) -> DVector<f64> {
        let full = self.embed(x);
        let n = self.basis.descriptor().local_dim();
        let shift = 1.0 / n as f64;
        let mut out = Vec::with_capacity(self.target.len() * n * n * 2);
        for (k, t) in self.target.iter().enumerate() {
            let rho = one_body_cross(self.basis, &full, &full, k);
            push_hermitian(&mut out, &rho, |i, j| t[(i, j)] + if i == j { c(shift, 0.0) } else { ZERO });
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, x: &CVec) -> DMatrix<f64> {
        let full = self.embed(x);
        let n = self.basis.descriptor().local_dim();
        let d = x.len();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(2 * d);
        for j in 0..d {
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut delta = CVec::zeros(self.basis.len());
                delta[self.positions[j]] = dir;
                let mut out = Vec::with_capacity(self.target.len() * n * n * 2);
                for k in 0..self.target.len() {
                    let d_rho = one_body_cross(self.basis, &delta, &full, k) + one_body_cross(self.basis, &full, &delta, k);
                    push_hermitian(&mut out, &d_rho, |_, _| ZERO);
                }
                cols.push(DVector::from_vec(out));
            }
        }
        DMatrix::from_columns(&cols)
    }
}

fn push_hermitian(out: &mut Vec<f64>, m: &CMat, minus: impl Fn(usize, usize) -> num_complex::Complex64) {
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            let z = m[(i, j)] - minus(i, j);
            out.push(z.re);
            if i != j {
                out.push(z.im);
            }
        }
    }
}

fn normalize(x: CVec) -> CVec {
    let n = x.norm();
    x.unscale(n)
}

/// Projected gradient descent with Armijo backtracking on the unit sphere.
fn descend(obj: &Objective, mut x: CVec, opts: &SearchOptions) -> (CVec, f64) {
    const WINDOW: usize = 50;
    let converged = (opts.tol * 1e-2).powi(2);
    let mut step = opts.step;
    let (mut value, mut grad) = obj.gradient(&x);
    let mut window_start = value;
    for it in 1..=opts.max_iter {
        if value < converged {
            break;
        }
        let gnorm_sq = grad.norm_squared();
        if gnorm_sq < 1e-16 {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let trial = normalize(&x - grad.scale(step));
            let trial_value = obj.value(&trial);
            if trial_value <= value - 1e-4 * step * gnorm_sq {
                x = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        (value, grad) = obj.gradient(&x);
        step = (step * 2.0).min(1e3);
        // far from zero and barely moving: a positive minimum
        if it % WINDOW == 0 {
            if value > 1e-4 && value > 0.99 * window_start {
                break;
            }
            window_start = value;
        }
    }
    (x, value)
}

/// Gauss–Newton on the density residual; only decreasing steps are taken.
fn polish(obj: &Objective, mut x: CVec) -> CVec {
    let mut r = obj.residual(&x);
    let mut rnorm = r.norm();
    for _ in 0..40 {
        if rnorm < 1e-15 {
            break;
        }
        let jac = obj.jacobian(&x);
        let svd = SVD::new(jac, true, true);
        let smax = svd.singular_values.max();
        let Ok(dx) = svd.solve(&(-&r), smax * 1e-10) else { break };
        let delta = CVec::from_iterator(x.len(), (0..x.len()).map(|j| c(dx[2 * j], dx[2 * j + 1])));
        let trial = &x + delta;
        let r_trial = obj.residual(&trial);
        let trial_norm = r_trial.norm();
        if trial_norm >= rnorm {
            break;
        }
        x = trial;
        r = r_trial;
        rnorm = trial_norm;
    }
    normalize(x)
}

/// Multistart search for states in one eigenspace whose momentum equals
/// `target`. Returns unit vectors in the full space, at most one per
/// classification fingerprint, in discovery order.
fn solve_group(
    basis: &Basis,
    positions: &[usize],
    target: &MomentumValue,
    opts: &SearchOptions,
    seed_path: &[u64],
) -> Vec<CVec> {
    let obj = Objective::new(basis, positions, target);
    let d = positions.len();
    let accept = opts.tol * opts.tol;
    if d == 1 {
        let x = CVec::from_element(1, c(1.0, 0.0));
        return if obj.value(&x) < accept { vec![obj.embed(&x)] } else { Vec::new() };
    }
    let mut found = Vec::new();
    for start in 0..opts.starts {
        let mut path = seed_path.to_vec();
        path.push(start as u64);
        let mut rng = linalg::rng(linalg::derive_seed(opts.seed, &path));
        let x0 = normalize(linalg::random_complex_vector(d, &mut rng));
        let (x, value) = descend(&obj, x0, opts);
        let x = if value < 1e-3 { polish(&obj, x) } else { x };
        if obj.value(&x) < accept {
            found.push(obj.embed(&x));
        }
    }
    found
}

/// Public entry point: search one eigenspace of `α_P` for solutions of
/// `μ(ψ) = diag(P)`, deduplicated by fingerprint.
pub fn solve_in_eigenspace(alpha: &AlphaOperator, space: &Eigenspace, opts: &SearchOptions) -> Result<Vec<PureState>> {
    opts.validate()?;
    let desc = alpha.descriptor();
    let basis = desc.basis();
    let raw = solve_group(&basis, &space.positions, &alpha.target(), opts, &[]);
    let denominator = default_denominator(desc.local_dim());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in raw {
        let psi = PureState::new(desc, v)?;
        let point = analyze_point(&psi, Branch::Sweep, Some(alpha.point().clone()), denominator, opts)?;
        if seen.insert(point.fingerprint()) {
            out.push(point.state);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    ZeroMomentum,
    Sweep,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    /// Standardized unit representative.
    pub state: PureState,
    pub lambda: f64,
    pub variance: f64,
    pub momentum_norm_sq: f64,
    /// Candidate the point was found from (`None` for the zero-momentum branch).
    pub candidate: Option<SpectrumPoint>,
    /// Momentum spectra rounded to the grid.
    pub spectrum: SpectrumPoint,
    pub float_spectra: Vec<Vec<f64>>,
    pub morse_index: u32,
    pub marginal_directions: u32,
    pub residual: f64,
    pub branch: Branch,
    pub fd_deviation: Option<f64>,
}

/// Orbit fingerprint: sorted spectra per component, variance and index,
/// each rounded to six decimals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    spectra: Vec<Vec<i64>>,
    variance: i64,
    index: u32,
}

fn round6(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

impl CriticalPoint {
    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            spectra: self.float_spectra.iter().map(|s| s.iter().map(|&x| round6(x)).collect()).collect(),
            variance: round6(self.variance),
            index: self.morse_index,
        }
    }
}

/// Exact values implied by the rounded spectrum, when they agree with the
/// floating-point ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactValues {
    pub lambda: Rational64,
    pub variance: Rational64,
    pub momentum_norm_sq: Rational64,
}

impl CriticalPoint {
    pub fn exact_values(&self) -> Option<ExactValues> {
        let desc = self.state.descriptor();
        let alpha = build_alpha(&self.spectrum, desc).ok()?;
        let support = self
            .state
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))?
            .0;
        let lambda = alpha.diagonal()[support];
        let mnsq = self.spectrum.norm_sq();
        let w = desc.expectation_weight() as i64;
        let variance = casimir_rational(desc) - mnsq * Rational64::from_integer(w * w);
        let close = |r: Rational64, x: f64| (*r.numer() as f64 / *r.denom() as f64 - x).abs() < 1e-8;
        (close(lambda, self.lambda) && close(variance, self.variance) && close(mnsq, self.momentum_norm_sq))
            .then_some(ExactValues { lambda, variance, momentum_norm_sq: mnsq })
    }
}

/// Evaluates every reported quantity at a (candidate) critical state.
pub fn analyze_point(
    psi: &PureState,
    branch: Branch,
    candidate: Option<SpectrumPoint>,
    denominator: i64,
    opts: &SearchOptions,
) -> Result<CriticalPoint> {
    let (state, _) = standardize(&psi.normalized())?;
    let crit = is_critical(&state, opts.criticality_tol);
    let variance = total_variance(&state)?;
    let mnsq = momentum_norm_sq(&state)?;
    let est = spectrum_point(&state, denominator)?;
    let morse = morse_index(&state, crit.lambda, opts.rank_tol, opts.index_tol)?;
    let fd_deviation = if opts.fd_directions > 0 {
        Some(hessian_fd_check(&state, opts.fd_directions, 1e-4, opts.seed)?)
    } else {
        None
    };
    Ok(CriticalPoint {
        state,
        lambda: crit.lambda,
        variance,
        momentum_norm_sq: mnsq,
        candidate,
        spectrum: est.point,
        float_spectra: est.float_spectra,
        morse_index: morse.index,
        marginal_directions: morse.marginal_directions,
        residual: crit.residual,
        branch,
        fd_deviation,
    })
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub descriptor: SystemDescriptor,
    pub denominator: i64,
    pub candidates: usize,
    pub eigenspaces_searched: usize,
    /// Distinct critical points in descending order of variance.
    pub points: Vec<CriticalPoint>,
    pub warnings: Vec<String>,
}

fn map_tasks<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

struct Task {
    candidate: Option<usize>,
    eigenspace: usize,
    positions: Vec<usize>,
    target: MomentumValue,
}

/// Full classification: the sweep over every candidate of the system's
/// registered predicate plus the zero-momentum branch.
pub fn classify_system(
    descriptor: SystemDescriptor,
    denominator: Option<i64>,
    opts: &SearchOptions,
) -> Result<Classification> {
    classify_with_predicate(descriptor, denominator, None, opts)
}

pub fn classify_with_predicate(
    descriptor: SystemDescriptor,
    denominator: Option<i64>,
    predicate: Option<MembershipPredicate>,
    opts: &SearchOptions,
) -> Result<Classification> {
    let den = denominator.unwrap_or_else(|| default_denominator(descriptor.local_dim()));
    let candidates = enumerate_candidates(descriptor, den, predicate)?;
    classify_at_points(descriptor, den, &candidates, true, opts)
}

/// Runs the search at the given candidate points only; `include_zero` adds
/// the zero-momentum branch.
pub fn classify_at_points(
    descriptor: SystemDescriptor,
    denominator: i64,
    candidates: &[SpectrumPoint],
    include_zero: bool,
    opts: &SearchOptions,
) -> Result<Classification> {
    opts.validate()?;
    let basis = descriptor.basis();
    let mut tasks = Vec::new();
    if include_zero {
        tasks.push(Task {
            candidate: None,
            eigenspace: 0,
            positions: (0..basis.len()).collect(),
            target: MomentumValue::zero(descriptor),
        });
    }
    for (ci, p) in candidates.iter().enumerate() {
        let alpha = build_alpha(p, descriptor)?;
        let target = alpha.target();
        for (ei, space) in eigenspaces(&alpha).into_iter().enumerate() {
            tasks.push(Task { candidate: Some(ci), eigenspace: ei, positions: space.positions, target: target.clone() });
        }
    }
    let raw = map_tasks(&tasks, opts.parallel, |t| {
        let path = [t.candidate.map_or(u64::MAX, |c| c as u64), t.eigenspace as u64];
        solve_group(&basis, &t.positions, &t.target, opts, &path)
    });

    let mut found = Vec::new();
    for (task, vecs) in tasks.iter().zip(raw) {
        for v in vecs {
            found.push((task.candidate, v));
        }
    }
    let analyzed = map_tasks(&found, opts.parallel, |(ci, v)| {
        let psi = PureState::new(descriptor, v.clone())?;
        let branch = if ci.is_some() { Branch::Sweep } else { Branch::ZeroMomentum };
        analyze_point(&psi, branch, ci.map(|i| candidates[i].clone()), denominator, opts)
    });

    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for point in analyzed {
        let point = point?;
        if point.residual >= opts.criticality_tol {
            warnings.push(format!(
                "dropped a solution at {} with criticality residual {:.3e}",
                point.spectrum, point.residual
            ));
            continue;
        }
        if let Some(p) = &point.candidate {
            if p != &point.spectrum {
                warnings.push(format!("dropped a solution found at {p} whose spectrum rounds to {}", point.spectrum));
                continue;
            }
        }
        if seen.insert(point.fingerprint()) {
            points.push(point);
        }
    }
    // rounded Var first so that float noise cannot reorder equal classes
    points.sort_by(|a, b| {
        let (fa, fb) = (a.fingerprint(), b.fingerprint());
        fb.variance.cmp(&fa.variance).then_with(|| fb.spectra.cmp(&fa.spectra)).then_with(|| fa.index.cmp(&fb.index))
    });
    let has_zero = points.iter().any(|p| p.branch == Branch::ZeroMomentum);
    if include_zero && has_zero {
        warnings.push(
            "zero-momentum branch: class family, representatives only (one state per fingerprint inside μ⁻¹(0))"
                .into(),
        );
    }
    for p in &points {
        if p.marginal_directions > 0 {
            warnings.push(format!(
                "critical point at {} has {} marginal Hessian direction(s); its index counts strict descents only",
                p.spectrum, p.marginal_directions
            ));
        }
    }
    Ok(Classification {
        descriptor,
        denominator,
        candidates: candidates.len(),
        eigenspaces_searched: tasks.len(),
        points,
        warnings,
    })
}
