//! Built-in property suites: identities and invariances that every build must
//! satisfy, each reported as pass/fail with the worst deviation observed.

use serde::Serialize;

use crate::algebra::{casimir_constant, casimir_expectation};
use crate::catalog;
use crate::critical::{is_critical, is_zero_momentum, DEFAULT_CRITICALITY_TOL};
use crate::linalg::{self, c, CMat, CVec};
use crate::momentum::{expectation_norm_sq, momentum, reduced_density, total_variance};
use crate::morse::{hessian_fd_check, morse_index, tangent_slocc, DEFAULT_INDEX_TOL, DEFAULT_RANK_TOL};
use crate::polytope::{registered_predicate, spectrum_point};
use crate::system::SystemDescriptor;
use crate::{random_state, PureState, Result};

#[derive(Debug, Clone, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub detail: String,
}

impl PropertyOutcome {
    fn from_deviation(name: &'static str, max_deviation: f64, tol: f64, detail: String) -> Self {
        PropertyOutcome { name, passed: max_deviation.is_finite() && max_deviation < tol, max_deviation, detail }
    }
}

/// Systems sampled by the identity suites: every kind, small sizes.
pub fn identity_systems() -> Vec<SystemDescriptor> {
    let mut out = Vec::new();
    for n in 2..=4 {
        for l in 1..=3 {
            out.push(SystemDescriptor::distinguishable(n, l).expect("valid"));
        }
    }
    out.push(catalog::wedge35());
    out.push(SystemDescriptor::bosonic(3, 3).expect("valid"));
    out
}

/// `|Var − (c − Σ_i <X_i>²)|` and `|<𝒞₂> − c|` over `samples` random states.
pub fn variance_identity(samples: usize, seed: u64) -> Result<(f64, f64)> {
    let systems = identity_systems();
    let mut var_dev: f64 = 0.0;
    let mut casimir_dev: f64 = 0.0;
    for s in 0..samples {
        let desc = systems[s % systems.len()];
        let psi = random_state(desc, linalg::derive_seed(seed, &[1, s as u64]));
        // unnormalized on purpose: every formula must carry the 1/<ψ|ψ> factor
        let psi = psi.scaled(c(1.7, -0.4))?;
        let cst = casimir_constant(desc)?;
        var_dev = var_dev.max((total_variance(&psi)? - (cst - expectation_norm_sq(&psi))).abs());
        casimir_dev = casimir_dev.max((casimir_expectation(&psi) - cst).abs());
    }
    Ok((var_dev, casimir_dev))
}

pub fn random_local_unitaries(desc: SystemDescriptor, seed: u64) -> Vec<CMat> {
    let mut rng = linalg::rng(seed);
    (0..desc.num_components()).map(|_| linalg::random_unitary(desc.local_dim(), &mut rng)).collect()
}

/// Deviations of (Var, spectra) and mismatches of (verdict, index) over
/// random local unitaries applied to every catalogued critical point.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct InvarianceReport {
    pub variance_dev: f64,
    pub spectra_dev: f64,
    pub verdict_mismatches: usize,
    pub index_mismatches: usize,
}

pub fn k_invariance(trials: usize, seed: u64) -> Result<InvarianceReport> {
    let mut rep = InvarianceReport::default();
    for (n, (_, psi, _)) in catalog::example_critical_points().into_iter().enumerate() {
        let var = total_variance(&psi)?;
        let spectra = momentum(&psi).spectra();
        let crit = is_critical(&psi, DEFAULT_CRITICALITY_TOL);
        let index = morse_index(&psi, crit.lambda, DEFAULT_RANK_TOL, DEFAULT_INDEX_TOL)?.index;
        for t in 0..trials {
            let us = random_local_unitaries(psi.descriptor(), linalg::derive_seed(seed, &[2, n as u64, t as u64]));
            let moved = psi.apply_local(&us)?;
            rep.variance_dev = rep.variance_dev.max((total_variance(&moved)? - var).abs());
            for (a, b) in momentum(&moved).spectra().iter().zip(&spectra) {
                for (x, y) in a.iter().zip(b) {
                    rep.spectra_dev = rep.spectra_dev.max((x - y).abs());
                }
            }
            let moved_crit = is_critical(&moved, DEFAULT_CRITICALITY_TOL);
            if moved_crit.critical != crit.critical {
                rep.verdict_mismatches += 1;
            }
            if morse_index(&moved, moved_crit.lambda, DEFAULT_RANK_TOL, DEFAULT_INDEX_TOL)?.index != index {
                rep.index_mismatches += 1;
            }
        }
    }
    Ok(rep)
}

/// `exp(ε·Y)` for a random element `Y` of the complexified local algebra,
/// normalized to unit Hilbert–Schmidt norm per site.
pub fn random_slocc_step(desc: SystemDescriptor, eps: f64, seed: u64) -> Vec<CMat> {
    let mut rng = linalg::rng(seed);
    let n = desc.local_dim();
    (0..desc.num_components())
        .map(|_| {
            let a = linalg::random_traceless_hermitian(n, &mut rng);
            let b = linalg::random_traceless_hermitian(n, &mut rng);
            let y = a + b * c(0.0, 1.0);
            let y = y.unscale(linalg::hs_norm_sq(&y).sqrt());
            linalg::expm(&y.scale(eps))
        })
        .collect()
}

/// Largest `Var(exp(εY)ψ) − Var(ψ)` over random SLOCC steps, and the change
/// of Var along a given non-local direction.
pub fn slocc_maximum(psi: &PureState, trials: usize, eps: f64, seed: u64, direction: &CVec) -> Result<(f64, f64)> {
    let var = total_variance(psi)?;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let g = random_slocc_step(psi.descriptor(), eps, linalg::derive_seed(seed, &[3, t as u64]));
        worst = worst.max(total_variance(&psi.apply_local(&g)?)? - var);
    }
    let unit = psi.normalized();
    let bumped = unit.with_amplitudes(unit.amplitudes() + direction.scale(eps))?;
    Ok((worst, total_variance(&bumped)? - var))
}

fn basis_vector(psi: &PureState, labels: &[usize]) -> Result<CVec> {
    let mut v = CVec::zeros(psi.dim());
    v[psi.basis().position_of_labels(labels)?] = c(1.0, 0.0);
    Ok(v)
}

/// Runs every suite. Properties are independent; a failing one does not stop the rest.
pub fn run_all(seed: u64) -> Result<Vec<PropertyOutcome>> {
    let mut out = Vec::new();

    let (var_dev, cas_dev) = variance_identity(200, seed)?;
    out.push(PropertyOutcome::from_deviation(
        "variance_identity",
        var_dev,
        1e-10,
        "Var = c − Σ<X_i>² over 200 random states of all kinds".into(),
    ));
    out.push(PropertyOutcome::from_deviation(
        "casimir_probe",
        cas_dev,
        1e-10,
        "<𝒞₂>/<ψ|ψ> = c over 200 random states".into(),
    ));

    let inv = k_invariance(50, seed)?;
    out.push(PropertyOutcome::from_deviation(
        "k_invariance",
        inv.variance_dev.max(inv.spectra_dev),
        1e-9,
        format!(
            "Var/spectra under 50 local unitaries per example; {} verdict and {} index mismatches",
            inv.verdict_mismatches, inv.index_mismatches
        ),
    ));
    if let Some(last) = out.last_mut() {
        last.passed &= inv.verdict_mismatches == 0 && inv.index_mismatches == 0;
    }

    let mut fd_worst: f64 = 0.0;
    let mut parity_ok = true;
    for (n, (_, psi, _)) in catalog::example_critical_points().into_iter().enumerate() {
        fd_worst = fd_worst.max(hessian_fd_check(&psi, 16, 1e-4, linalg::derive_seed(seed, &[4, n as u64]))?);
        let crit = is_critical(&psi, DEFAULT_CRITICALITY_TOL);
        let m = morse_index(&psi, crit.lambda, DEFAULT_RANK_TOL, DEFAULT_INDEX_TOL)?;
        parity_ok &= m.index % 2 == 0 && (!is_zero_momentum(&psi, 1e-9) || m.index == 0);
    }
    let mut fd = PropertyOutcome::from_deviation(
        "hessian_finite_differences",
        fd_worst,
        1e-3,
        "analytic vs central-difference Hessian, h = 1e-4; indices even, zero at μ = 0".into(),
    );
    fd.passed &= parity_ok;
    out.push(fd);

    let w = catalog::w();
    let (worst, bump) = slocc_maximum(&w, 100, 0.05, seed, &basis_vector(&w, &[2, 2, 2])?)?;
    out.push(PropertyOutcome {
        name: "w_orbit_maximum",
        passed: worst <= 1e-9 && bump > 0.0,
        max_deviation: worst.max(0.0),
        detail: format!("max ΔVar over 100 SLOCC steps {worst:.3e}; ΔVar along |111> {bump:.3e}"),
    });

    let ts = tangent_slocc(&w, DEFAULT_RANK_TOL);
    let w_dev = ts.distance_from_complement(&basis_vector(&w, &[2, 2, 2])?);
    let psi2_dim = tangent_slocc(&catalog::wedge_psi2(), DEFAULT_RANK_TOL).complement_dim();
    out.push(PropertyOutcome {
        name: "tangent_complements",
        passed: ts.complement_dim() == 1 && w_dev < 1e-8 && psi2_dim == 0,
        max_deviation: w_dev,
        detail: format!("W complement dim {}, ψ₂ complement dim {psi2_dim}", ts.complement_dim()),
    });

    let mut eq_dev: f64 = 0.0;
    let mut scale_dev: f64 = 0.0;
    for (s, desc) in identity_systems().into_iter().enumerate() {
        let psi = random_state(desc, linalg::derive_seed(seed, &[5, s as u64]));
        let us = random_local_unitaries(desc, linalg::derive_seed(seed, &[6, s as u64]));
        let moved = psi.apply_local(&us)?;
        for k in 0..desc.num_components() {
            let rho = reduced_density(&psi, k + 1)?.into_matrix();
            let expected = &us[k] * rho * us[k].adjoint();
            eq_dev = eq_dev.max(linalg::max_abs(&(reduced_density(&moved, k + 1)?.into_matrix() - expected)));
        }
        let z = c(-0.3, 2.2);
        scale_dev = scale_dev.max((total_variance(&psi.scaled(z)?)? - total_variance(&psi)?).abs());
    }
    out.push(PropertyOutcome::from_deviation(
        "momentum_equivariance",
        eq_dev,
        1e-10,
        "ρ_k(Uψ) = U_k ρ_k(ψ) U_k† on every identity system".into(),
    ));
    out.push(PropertyOutcome::from_deviation(
        "scale_invariance",
        scale_dev,
        1e-10,
        "Var(zψ) = Var(ψ)".into(),
    ));

    let mut outside = 0;
    for desc in [catalog::qubits3(), catalog::wedge35()] {
        let predicate = registered_predicate(desc).expect("shipped catalog");
        for s in 0..100u64 {
            let psi = random_state(desc, linalg::derive_seed(seed, &[7, s]));
            let point = spectrum_point(&psi, 300_000)?.point;
            if !predicate(&point) {
                outside += 1;
            }
        }
    }
    out.push(PropertyOutcome {
        name: "polytope_membership",
        passed: outside == 0,
        max_deviation: outside as f64,
        detail: format!("{outside} of 200 random spectra outside the catalogued polytope"),
    });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_properties_pass() {
        for outcome in run_all(7).unwrap() {
            assert!(outcome.passed, "{outcome:?}");
        }
    }

    #[test]
    fn slocc_step_is_invertible() {
        for m in random_slocc_step(catalog::qubits3(), 0.05, 1) {
            assert!(linalg::determinant(&m).norm() > 0.5);
        }
    }
}
