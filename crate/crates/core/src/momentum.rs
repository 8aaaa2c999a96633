//! Reduced one-particle density matrices, the momentum map and the total
//! variance.
//!
//! For identical particles the reduced density is normalized to trace one,
//! `ρ_ij = <a†_j a_i>/(L<ψ|ψ>)`, while the lifted generators act as
//! derivations, so `<dΓ(X)> = L·tr(ρX)`. The expectation-value norm of the
//! momentum therefore carries a factor `L²` relative to `Σ tr(μ_k²)`; see
//! [`SystemDescriptor::expectation_weight`].

use crate::algebra::{casimir_constant, observables_for};
use crate::linalg::{self, c, CMat, CVec, ZERO};
use crate::state::apply_algebra_vec;
use crate::system::{Basis, ParticleKind, SystemDescriptor};
use crate::{Error, PureState, Result};

const CROSS_CHECK_TOL: f64 = 1e-10;

/// Trace-one positive semidefinite reduced density matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    /// Eigenvalues, non-increasing.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut v = linalg::hermitian_eigenvalues(&self.0);
        v.reverse();
        v
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.0)
    }

    pub fn trace_residual(&self) -> f64 {
        (self.0.trace() - c(1.0, 0.0)).norm()
    }
}

/// Tuple of traceless Hermitian matrices `ρ_k − I/N`: one per site for
/// distinguishable particles, a single one for identical particles.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumValue {
    components: Vec<CMat>,
}

impl MomentumValue {
    pub fn new(components: Vec<CMat>) -> Self {
        MomentumValue { components }
    }

    pub fn zero(descriptor: SystemDescriptor) -> Self {
        let n = descriptor.local_dim();
        MomentumValue { components: vec![CMat::zeros(n, n); descriptor.num_components()] }
    }

    pub fn components(&self) -> &[CMat] {
        &self.components
    }

    /// `Σ_k tr(μ_k²)`.
    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(linalg::hs_norm_sq).sum()
    }

    pub fn max_abs_diff(&self, other: &MomentumValue) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
    }

    /// Non-increasing spectra of each component.
    pub fn spectra(&self) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|m| {
                let mut v = linalg::hermitian_eigenvalues(m);
                v.reverse();
                v
            })
            .collect()
    }
}

/// `M_ij = Σ φ_{..i..} conj(χ_{..j..})` at `site` (0-based), or the
/// one-body analogue `<χ|a†_j a_i|φ>/L` for identical particles. With
/// `φ = χ = ψ` this is the unnormalized reduced density.
pub(crate) fn one_body_cross(basis: &Basis, phi: &CVec, chi: &CVec, site: usize) -> CMat {
    let desc = basis.descriptor();
    let n = desc.local_dim();
    let mut m = CMat::zeros(n, n);
    match desc.kind() {
        ParticleKind::Distinguishable => {
            let stride = basis.stride(site);
            for pos in 0..phi.len() {
                let a = (pos / stride) % n;
                let base = pos - a * stride;
                let p = phi[pos];
                if p == ZERO {
                    continue;
                }
                for b in 0..n {
                    m[(a, b)] += p * chi[base + b * stride].conj();
                }
            }
        }
        _ => {
            let inv_l = 1.0 / desc.num_particles() as f64;
            for (src, p) in phi.iter().enumerate() {
                if *p == ZERO {
                    continue;
                }
                for hop in basis.hops(src) {
                    m[(hop.annihilate, hop.create)] += p * chi[hop.target].conj() * (hop.coeff * inv_l);
                }
            }
        }
    }
    m
}

pub(crate) fn reduced_density_raw(basis: &Basis, amps: &CVec, site: usize) -> CMat {
    let norm = amps.norm_squared();
    one_body_cross(basis, amps, amps, site).unscale(norm)
}

pub(crate) fn momentum_raw(basis: &Basis, amps: &CVec) -> Vec<CMat> {
    let desc = basis.descriptor();
    let n = desc.local_dim();
    let shift = c(1.0 / n as f64, 0.0);
    (0..desc.num_components())
        .map(|k| {
            let mut rho = reduced_density_raw(basis, amps, k);
            for i in 0..n {
                rho[(i, i)] -= shift;
            }
            rho
        })
        .collect()
}

/// Reduced density at a 1-based `site`; identical particles only have site 1.
pub fn reduced_density(psi: &PureState, site: usize) -> Result<DensityMatrix> {
    let max = psi.descriptor().num_components();
    if site == 0 || site > max {
        return Err(Error::SiteOutOfRange { site, max });
    }
    Ok(DensityMatrix(reduced_density_raw(psi.basis(), psi.amplitudes(), site - 1)))
}

pub fn momentum(psi: &PureState) -> MomentumValue {
    MomentumValue { components: momentum_raw(psi.basis(), psi.amplitudes()) }
}

/// `Σ_i <X_i>² / <ψ|ψ>²` over the lifted generators.
pub fn expectation_norm_sq(psi: &PureState) -> f64 {
    let obs = observables_for(psi.descriptor());
    let v = psi.amplitudes();
    let n = psi.norm_sq();
    (0..obs.len()).map(|i| (v.dotc(&obs.apply(i, v)).re / n).powi(2)).sum()
}

/// `Σ_k tr(μ_k²)`, cross-checked against the expectation-value form.
pub fn momentum_norm_sq(psi: &PureState) -> Result<f64> {
    let trace_form = momentum(psi).norm_sq();
    let w = psi.descriptor().expectation_weight();
    let expectation_form = expectation_norm_sq(psi) / (w * w);
    let residual = (trace_form - expectation_form).abs();
    if residual > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck { what: "momentum norm (trace vs expectation form)", residual });
    }
    Ok(trace_form)
}

/// `Σ_i (<X_i²> − <X_i>²)` with normalized expectations, cross-checked
/// against `c − w²·Σ_k tr(μ_k²)`.
pub fn total_variance(psi: &PureState) -> Result<f64> {
    let obs = observables_for(psi.descriptor());
    let v = psi.amplitudes();
    let n = psi.norm_sq();
    let mut var = 0.0;
    for i in 0..obs.len() {
        let ov = obs.apply(i, v);
        let mean = v.dotc(&ov).re / n;
        var += ov.norm_squared() / n - mean * mean;
    }
    let casimir = casimir_constant(psi.descriptor())?;
    let w = psi.descriptor().expectation_weight();
    let via_momentum = casimir - w * w * momentum_norm_sq(psi)?;
    let residual = (var - via_momentum).abs();
    if residual > CROSS_CHECK_TOL * casimir.max(1.0) {
        return Err(Error::CrossCheck { what: "total variance identity", residual });
    }
    Ok(var)
}

/// Momentum value acting on the system space as a sum of local terms.
#[derive(Debug, Clone)]
pub struct MomentumOperator {
    descriptor: SystemDescriptor,
    components: Vec<CMat>,
}

impl MomentumOperator {
    pub fn descriptor(&self) -> SystemDescriptor {
        self.descriptor
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        apply_algebra_vec(&self.descriptor.basis(), v, &self.components).expect("shape validated at construction")
    }

    pub fn to_dense(&self) -> CMat {
        let d = self.descriptor.dimension();
        let cols: Vec<CVec> = (0..d)
            .map(|j| {
                let mut e = CVec::zeros(d);
                e[j] = c(1.0, 0.0);
                self.apply(&e)
            })
            .collect();
        CMat::from_columns(&cols)
    }

    /// `<v|M|v>/<v|v>`.
    pub fn rayleigh_quotient(&self, v: &CVec) -> f64 {
        v.dotc(&self.apply(v)).re / v.norm_squared()
    }
}

pub fn momentum_operator(m: &MomentumValue, descriptor: SystemDescriptor) -> Result<MomentumOperator> {
    let expected = descriptor.num_components();
    if m.components.len() != expected {
        return Err(Error::Arity { expected, got: m.components.len() });
    }
    for comp in &m.components {
        if comp.shape() != (descriptor.local_dim(), descriptor.local_dim()) {
            return Err(Error::DimensionMismatch { expected: descriptor.local_dim(), got: comp.nrows() });
        }
    }
    Ok(MomentumOperator { descriptor, components: m.components.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::{random_unitary, ONE};
    use crate::random_state;

    fn diag(entries: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0))))
    }

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        linalg::max_abs(&(a - b)) < tol
    }

    #[test]
    fn reduced_densities() {
        let rho = reduced_density(&catalog::ghz(), 1).unwrap();
        assert!(close(rho.matrix(), &diag(&[0.5, 0.5]), 1e-15));
        let sep = catalog::separable();
        for site in 1..=3 {
            assert!(close(reduced_density(&sep, site).unwrap().matrix(), &diag(&[1.0, 0.0]), 1e-15));
        }
        let rho = reduced_density(&catalog::wedge_psi2(), 1).unwrap();
        let sixth = 1.0 / 6.0;
        assert!(close(rho.matrix(), &diag(&[1.0 / 3.0, sixth, sixth, sixth, sixth]), 1e-15));
        assert!(matches!(reduced_density(&sep, 4), Err(Error::SiteOutOfRange { .. })));
        assert!(reduced_density(&catalog::wedge_psi2(), 2).is_err());
    }

    #[test]
    fn momentum_examples() {
        let m = momentum(&catalog::ghz());
        assert!(m.components().iter().all(|c| linalg::max_abs(c) < 1e-15));
        let m = momentum(&catalog::w());
        assert_eq!(m.components().len(), 3);
        for comp in m.components() {
            assert!(close(comp, &diag(&[1.0 / 6.0, -1.0 / 6.0]), 1e-15));
        }
        let m = momentum(&catalog::wedge_psi1());
        let (a, b) = (2.0 / 15.0, -0.2);
        assert!(close(&m.components()[0], &diag(&[a, a, a, b, b]), 1e-15));
    }

    #[test]
    fn norm_sq_examples() {
        assert!(momentum_norm_sq(&catalog::ghz()).unwrap().abs() < 1e-15);
        assert!((momentum_norm_sq(&catalog::w()).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert!((momentum_norm_sq(&catalog::wedge_psi2()).unwrap() - 1.0 / 45.0).abs() < 1e-14);
        // expectation form carries L² for identical particles
        assert!((expectation_norm_sq(&catalog::wedge_psi2()) - 9.0 / 45.0).abs() < 1e-14);
    }

    #[test]
    fn variance_examples() {
        assert!((total_variance(&catalog::ghz()).unwrap() - 4.5).abs() < 1e-12);
        assert!((total_variance(&catalog::separable()).unwrap() - 3.0).abs() < 1e-12);
        assert!((total_variance(&catalog::w()).unwrap() - 13.0 / 3.0).abs() < 1e-12);
        assert!((total_variance(&catalog::biseparable(1)).unwrap() - 4.0).abs() < 1e-12);
        // oracle: full tensor-product embedding (numpy) gives 6 and 7
        assert!((total_variance(&catalog::wedge_psi1()).unwrap() - 6.0).abs() < 1e-12);
        assert!((total_variance(&catalog::wedge_psi2()).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_operator_examples() {
        let q = catalog::qubits3();
        let zero = momentum_operator(&MomentumValue::zero(q), q).unwrap();
        assert_eq!(zero.to_dense().norm(), 0.0);
        let op = momentum_operator(&momentum(&catalog::w()), q).unwrap();
        let e100 = PureState::basis_state(q, &[2, 1, 1]).unwrap();
        assert!((op.apply(e100.amplitudes()) - e100.amplitudes().scale(1.0 / 6.0)).norm() < 1e-15);
        let f = catalog::wedge35();
        let op = momentum_operator(&momentum(&catalog::wedge_psi2()), f).unwrap();
        let e123 = PureState::basis_state(f, &[1, 2, 3]).unwrap();
        assert!((op.apply(e123.amplitudes()) - e123.amplitudes().scale(1.0 / 15.0)).norm() < 1e-15);
        assert!(momentum_operator(&MomentumValue::zero(q), f).is_err());
    }

    #[test]
    fn density_invariants_on_random_states() {
        for d in [catalog::qubits3(), catalog::wedge35(), SystemDescriptor::bosonic(3, 3).unwrap()] {
            for seed in 0..10 {
                let psi = random_state(d, seed).scaled(c(2.0, -1.0)).unwrap();
                for site in 1..=d.num_components() {
                    let rho = reduced_density(&psi, site).unwrap();
                    assert!(rho.hermiticity_residual() < 1e-12);
                    assert!(rho.trace_residual() < 1e-12);
                    assert!(*rho.spectrum().last().unwrap() > -1e-10);
                }
                let m = momentum(&psi);
                assert!(m.components().iter().all(|c| c.trace().norm() < 1e-12));
            }
        }
    }

    #[test]
    fn equivariance_under_local_unitaries() {
        let d = SystemDescriptor::distinguishable(3, 2).unwrap();
        let psi = random_state(d, 3);
        let mut r = linalg::rng(4);
        let us: Vec<CMat> = (0..2).map(|_| random_unitary(3, &mut r)).collect();
        let moved = psi.apply_local(&us).unwrap();
        for k in 0..2 {
            let lhs = reduced_density(&moved, k + 1).unwrap().into_matrix();
            let rho = reduced_density(&psi, k + 1).unwrap().into_matrix();
            assert!(close(&lhs, &(&us[k] * rho * us[k].adjoint()), 1e-10));
        }
        let f = catalog::wedge35();
        let psi = random_state(f, 5);
        let u = random_unitary(5, &mut r);
        let lhs = reduced_density(&psi.apply_local(std::slice::from_ref(&u)).unwrap(), 1).unwrap().into_matrix();
        let rho = reduced_density(&psi, 1).unwrap().into_matrix();
        assert!(close(&lhs, &(&u * rho * u.adjoint()), 1e-10));
    }

    #[test]
    fn scale_invariance() {
        let psi = random_state(catalog::wedge35(), 21);
        let scaled = psi.scaled(c(-0.4, 3.0)).unwrap();
        assert!((total_variance(&psi).unwrap() - total_variance(&scaled).unwrap()).abs() < 1e-10);
        let _ = ONE;
    }
}
