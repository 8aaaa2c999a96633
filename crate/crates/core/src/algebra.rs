//! Orthonormal su(N) generators, their lift to the system space, and the
//! Casimir constant of the resulting representation.

use num_rational::Rational64;
use serde::Serialize;

use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};
use crate::state::apply_one_body;
use crate::system::{Basis, ParticleKind, SystemDescriptor};
use crate::{Error, PureState, Result};

/// Generators are materialized as dense operators up to this dimension.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Traceless Hermitian generators with `tr(X_i X_j) = δ_ij`.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    local_dim: usize,
    generators: Vec<CMat>,
}

impl AlgebraBasis {
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Largest deviation from Hermiticity, tracelessness and orthonormality.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, x) in self.generators.iter().enumerate() {
            worst = worst.max(linalg::hermiticity_residual(x)).max(x.trace().norm());
            for (j, y) in self.generators.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((linalg::hs_inner(x, y) - target).norm());
            }
        }
        worst
    }

    /// Coordinates of a traceless Hermitian matrix in this basis.
    pub fn coordinates(&self, m: &CMat) -> Vec<f64> {
        self.generators.iter().map(|x| linalg::hs_inner(x, m).re).collect()
    }
}

/// Generalized Gell-Mann matrices normalized to `tr(X_i X_j) = δ_ij`: the
/// symmetric and antisymmetric off-diagonal pairs for each `j < k`, followed
/// by the `N − 1` diagonal generators.
pub fn gell_mann_basis(n: usize) -> Result<AlgebraBasis> {
    if n < 2 {
        return Err(Error::InvalidSystem(format!("su({n}) needs N >= 2")));
    }
    let s = 1.0 / 2f64.sqrt();
    let mut generators = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = CMat::zeros(n, n);
            sym[(j, k)] = c(s, 0.0);
            sym[(k, j)] = c(s, 0.0);
            generators.push(sym);
            let mut anti = CMat::zeros(n, n);
            anti[(j, k)] = c(0.0, -s);
            anti[(k, j)] = c(0.0, s);
            generators.push(anti);
        }
    }
    for m in 1..n {
        let norm = ((m * (m + 1)) as f64).sqrt();
        let mut d = CMat::zeros(n, n);
        for i in 0..m {
            d[(i, i)] = c(1.0 / norm, 0.0);
        }
        d[(m, m)] = c(-(m as f64) / norm, 0.0);
        generators.push(d);
    }
    Ok(AlgebraBasis { local_dim: n, generators })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedGenerator {
    /// `Some(k)` acts on site `k` only; `None` is the symmetric derivation.
    pub site: Option<usize>,
    pub generator: usize,
}

/// The generators represented as operators on the system Hilbert space.
#[derive(Debug, Clone)]
pub struct LiftedObservableSet {
    descriptor: SystemDescriptor,
    algebra: AlgebraBasis,
    entries: Vec<LiftedGenerator>,
    dense: Option<Vec<CMat>>,
}

impl LiftedObservableSet {
    pub fn descriptor(&self) -> SystemDescriptor {
        self.descriptor
    }

    pub fn algebra(&self) -> &AlgebraBasis {
        &self.algebra
    }

    pub fn entries(&self) -> &[LiftedGenerator] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense matrix of operator `i`, if the set was materialized.
    pub fn dense(&self, i: usize) -> Option<&CMat> {
        self.dense.as_ref().map(|d| &d[i])
    }

    pub fn apply(&self, i: usize, v: &CVec) -> CVec {
        if let Some(m) = self.dense(i) {
            return m * v;
        }
        let basis = self.descriptor.basis();
        let entry = self.entries[i];
        let x = &self.algebra.generators[entry.generator];
        match entry.site {
            Some(site) => apply_single_site(&basis, v, site, x),
            None => apply_one_body(&basis, v, x),
        }
    }

    /// `Σ_i O_i² v`.
    pub fn apply_casimir(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for i in 0..self.len() {
            out += self.apply(i, &self.apply(i, v));
        }
        out
    }

    /// Dense operator for the Casimir element (panics above the dense cap).
    pub fn casimir_matrix(&self) -> CMat {
        let d = self.descriptor.dimension();
        let cols: Vec<CVec> = (0..d)
            .map(|j| {
                let mut e = CVec::zeros(d);
                e[j] = ONE;
                self.apply_casimir(&e)
            })
            .collect();
        CMat::from_columns(&cols)
    }
}

pub(crate) fn apply_single_site(basis: &Basis, v: &CVec, site: usize, x: &CMat) -> CVec {
    let n = basis.descriptor().local_dim();
    let stride = basis.stride(site);
    let mut out = CVec::zeros(v.len());
    for pos in 0..v.len() {
        let digit = (pos / stride) % n;
        let base = pos - digit * stride;
        let mut acc = ZERO;
        for b in 0..n {
            acc += x[(digit, b)] * v[base + b * stride];
        }
        out[pos] = acc;
    }
    out
}

pub fn lift_observables(basis: &AlgebraBasis, descriptor: SystemDescriptor) -> Result<LiftedObservableSet> {
    lift_observables_with_cap(basis, descriptor, DEFAULT_DENSE_CAP)
}

pub fn lift_observables_with_cap(
    algebra: &AlgebraBasis,
    descriptor: SystemDescriptor,
    dense_cap: usize,
) -> Result<LiftedObservableSet> {
    if algebra.local_dim() != descriptor.local_dim() {
        return Err(Error::DimensionMismatch { expected: descriptor.local_dim(), got: algebra.local_dim() });
    }
    let entries: Vec<LiftedGenerator> = match descriptor.kind() {
        ParticleKind::Distinguishable => (0..descriptor.num_particles())
            .flat_map(|site| (0..algebra.len()).map(move |g| LiftedGenerator { site: Some(site), generator: g }))
            .collect(),
        _ => (0..algebra.len()).map(|g| LiftedGenerator { site: None, generator: g }).collect(),
    };
    let mut set = LiftedObservableSet { descriptor, algebra: algebra.clone(), entries, dense: None };
    let dim = descriptor.dimension();
    if dim <= dense_cap {
        let dense = (0..set.len())
            .map(|i| {
                let cols: Vec<CVec> = (0..dim)
                    .map(|j| {
                        let mut e = CVec::zeros(dim);
                        e[j] = ONE;
                        set.apply(i, &e)
                    })
                    .collect();
                CMat::from_columns(&cols)
            })
            .collect();
        set.dense = Some(dense);
    }
    Ok(set)
}

/// Lifted observables for a system, with the default Gell-Mann basis.
pub fn observables_for(descriptor: SystemDescriptor) -> LiftedObservableSet {
    let algebra = gell_mann_basis(descriptor.local_dim()).expect("descriptor enforces N >= 2");
    lift_observables(&algebra, descriptor).expect("dimensions agree by construction")
}

/// Closed-form Casimir value for the normalization `tr(X_i X_j) = δ_ij`.
pub fn casimir_closed_form(descriptor: SystemDescriptor) -> f64 {
    let (n, l) = (descriptor.local_dim() as f64, descriptor.num_particles() as f64);
    match descriptor.kind() {
        ParticleKind::Distinguishable => l * (n * n - 1.0) / n,
        ParticleKind::Fermionic => l * (n - l) * (n + 1.0) / n,
        ParticleKind::Bosonic => l * (l + n) * (n - 1.0) / n,
    }
}

/// The closed form as an exact rational.
pub fn casimir_rational(descriptor: SystemDescriptor) -> Rational64 {
    let (n, l) = (descriptor.local_dim() as i64, descriptor.num_particles() as i64);
    let numer = match descriptor.kind() {
        ParticleKind::Distinguishable => l * (n * n - 1),
        ParticleKind::Fermionic => l * (n - l) * (n + 1),
        ParticleKind::Bosonic => l * (l + n) * (n - 1),
    };
    Rational64::new(numer, n)
}

const CASIMIR_TOL: f64 = 1e-10;

/// Scalar `c` with `Σ_i X_i² = c·I` on the system space.
///
/// Applies the Casimir element to the first basis vector and to a second,
/// pseudo-randomly chosen one; both probes and the closed form must agree.
pub fn casimir_constant(descriptor: SystemDescriptor) -> Result<f64> {
    let basis = descriptor.basis();
    if let Some(&cached) = basis.casimir.get() {
        return Ok(cached);
    }
    let obs = observables_for(descriptor);
    let dim = descriptor.dimension();
    let probe = |j: usize| -> Result<f64> {
        let mut e = CVec::zeros(dim);
        e[j] = ONE;
        let image = obs.apply_casimir(&e);
        let value = image[j].re;
        let mut off = image.clone();
        off[j] -= c(value, 0.0);
        let residual = off.norm() + image[j].im.abs();
        if residual > CASIMIR_TOL {
            return Err(Error::CrossCheck { what: "casimir eigenvector probe", residual });
        }
        Ok(value)
    };
    let first = probe(0)?;
    let second_pos = (linalg::derive_seed(dim as u64, &[descriptor.num_particles() as u64]) % dim as u64) as usize;
    let second = probe(second_pos)?;
    if (first - second).abs() > CASIMIR_TOL {
        return Err(Error::CrossCheck { what: "casimir probes disagree", residual: (first - second).abs() });
    }
    let closed = casimir_closed_form(descriptor);
    if (first - closed).abs() > CASIMIR_TOL {
        return Err(Error::CrossCheck { what: "casimir closed form", residual: (first - closed).abs() });
    }
    Ok(*basis.casimir.get_or_init(|| first))
}

/// `<ψ|C₂|ψ>/<ψ|ψ>` evaluated directly.
pub fn casimir_expectation(psi: &PureState) -> f64 {
    let obs = observables_for(psi.descriptor());
    let v = psi.amplitudes();
    v.dotc(&obs.apply_casimir(v)).re / psi.norm_sq()
}

/// Row-major JSON dump of the generators, `{"re": .., "im": ..}` per entry.
#[derive(Debug, Serialize)]
pub struct GeneratorDump {
    pub local_dim: usize,
    pub generators: Vec<Vec<Vec<ComplexEntry>>>,
}

#[derive(Debug, Serialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

impl From<&AlgebraBasis> for GeneratorDump {
    fn from(b: &AlgebraBasis) -> Self {
        let n = b.local_dim();
        let generators = b
            .generators()
            .iter()
            .map(|g| (0..n).map(|r| (0..n).map(|col| ComplexEntry { re: g[(r, col)].re, im: g[(r, col)].im }).collect()).collect())
            .collect();
        GeneratorDump { local_dim: n, generators }
    }
}
