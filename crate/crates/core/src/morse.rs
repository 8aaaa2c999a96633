//! Tangent space of the SLOCC orbit and the Morse index at a critical point.
//!
//! At an eigenvector `αψ = λψ` the Hessian of `f(φ) = <φ|α|φ>/<φ|φ>` in a
//! direction `v ⊥ ψ` is `2·Re<v|(α − λ)|v>`. It takes the same value on `v`
//! and `i·v`, so each negative complex eigendirection of the compression of
//! `α − λ` to `(𝔤.ψ)^⊥` contributes two real Morse directions.

use nalgebra::{DMatrix, SVD};
use serde::Serialize;

use crate::algebra::observables_for;
use crate::linalg::{self, c, CMat, CVec};
use crate::momentum::{momentum, momentum_operator, MomentumOperator};
use crate::{PureState, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_INDEX_TOL: f64 = 1e-9;

/// Orthonormal bases of `𝔤.ψ` and of its orthogonal complement.
#[derive(Debug, Clone)]
pub struct TangentSpace {
    pub basis: CMat,
    pub complement_basis: CMat,
    pub singular_values: Vec<f64>,
}

impl TangentSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn complement_dim(&self) -> usize {
        self.complement_basis.ncols()
    }

    /// Norm of the component of `v` outside `span(basis)`, relative to `|v|`.
    pub fn distance_from_span(&self, v: &CVec) -> f64 {
        let proj = &self.basis * (self.basis.adjoint() * v);
        (v - proj).norm() / v.norm()
    }

    /// Norm of the component of `v` outside the complement, relative to `|v|`.
    pub fn distance_from_complement(&self, v: &CVec) -> f64 {
        let proj = &self.complement_basis * (self.complement_basis.adjoint() * v);
        (v - proj).norm() / v.norm()
    }
}

/// Complex span of `{O_i ψ}` over the lifted generators (𝔤 is the
/// complexification of 𝔨, so multiplying by `i` adds nothing new), with
/// a relative singular-value cutoff.
pub fn tangent_slocc(psi: &PureState, rank_tol: f64) -> TangentSpace {
    let psi = psi.normalized();
    let obs = observables_for(psi.descriptor());
    let dim = psi.dim();
    let mut cols: Vec<CVec> = (0..obs.len()).map(|i| obs.apply(i, psi.amplitudes())).collect();
    while cols.len() < dim {
        cols.push(CVec::zeros(dim));
    }
    let m = CMat::from_columns(&cols);
    let svd = SVD::new(m, true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = rank_tol * singular_values.first().copied().unwrap_or(0.0);
    let rank = if singular_values.first().copied().unwrap_or(0.0) == 0.0 {
        0
    } else {
        singular_values.iter().filter(|&&s| s > cutoff).count()
    };
    let basis = CMat::from_fn(dim, rank, |r, k| u[(r, order[k])]);
    let complement_basis = CMat::from_fn(dim, dim - rank, |r, k| u[(r, order[rank + k])]);
    TangentSpace { basis, complement_basis, singular_values }
}

/// Complement of `𝔤.ψ` with the direction of `ψ` itself removed when ψ does
/// not lie in `𝔤.ψ` (the Rayleigh quotient is flat along ψ and iψ).
fn morse_complement(psi: &PureState, rank_tol: f64) -> (TangentSpace, CMat, bool) {
    let ts = tangent_slocc(psi, rank_tol);
    let unit = psi.normalized();
    let comp = &ts.complement_basis;
    let k = comp.ncols();
    let coords = comp.adjoint() * unit.amplitudes();
    let inside_tangent = coords.norm() < 1e-8;
    if inside_tangent || k == 0 {
        return (ts.clone(), ts.complement_basis, inside_tangent);
    }
    let q = coords.unscale(coords.norm());
    let projector = CMat::identity(k, k) - &q * q.adjoint();
    let (vals, vecs) = linalg::hermitian_eigen(&projector);
    let keep: Vec<CVec> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.5)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    let reduced = if keep.is_empty() { CMat::zeros(k, 0) } else { CMat::from_columns(&keep) };
    let basis = comp * reduced;
    (ts, basis, false)
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseIndex {
    /// Twice the number of negative eigenvalues of the compressed operator.
    pub index: u32,
    /// Eigenvalues within `±index_tol` of zero (degenerate Hessian directions).
    pub marginal_directions: u32,
    pub tangent_dim: usize,
    pub complement_dim: usize,
    /// Whether ψ lies in `𝔤.ψ`; if not, ψ was projected out before compressing.
    pub state_in_tangent: bool,
    pub compressed_eigenvalues: Vec<f64>,
}

/// Morse index of `‖μ‖²` at a critical state with eigenvalue `lambda`.
pub fn morse_index(psi: &PureState, lambda: f64, rank_tol: f64, index_tol: f64) -> Result<MorseIndex> {
    let alpha = momentum_operator(&momentum(psi), psi.descriptor())?;
    let (ts, comp, inside) = morse_complement(psi, rank_tol);
    let k = comp.ncols();
    let eigenvalues = if k == 0 {
        Vec::new()
    } else {
        let image = CMat::from_columns(&(0..k).map(|j| alpha.apply(&comp.column(j).into_owned())).collect::<Vec<_>>());
        let compressed = comp.adjoint() * image - CMat::identity(k, k).scale(lambda);
        linalg::hermitian_eigenvalues(&compressed)
    };
    let negative = eigenvalues.iter().filter(|&&e| e < -index_tol).count() as u32;
    let marginal = eigenvalues.iter().filter(|&&e| e.abs() <= index_tol).count() as u32;
    Ok(MorseIndex {
        index: 2 * negative,
        marginal_directions: marginal,
        tangent_dim: ts.dim(),
        complement_dim: ts.complement_dim(),
        state_in_tangent: inside,
        compressed_eigenvalues: eigenvalues,
    })
}

fn rayleigh(alpha: &MomentumOperator, v: &CVec) -> f64 {
    alpha.rayleigh_quotient(v)
}

/// Analytic Hessian `2·Re<v|(α − λ)|v>` and its second central difference
/// along a unit direction `v ⊥ ψ`.
pub fn hessian_fd_along(psi: &PureState, v: &CVec, h: f64) -> Result<(f64, f64)> {
    let unit = psi.normalized();
    let alpha = momentum_operator(&momentum(&unit), unit.descriptor())?;
    let x = unit.amplitudes();
    let lambda = rayleigh(&alpha, x);
    // keep only the part orthogonal to ψ
    let v = v - x * x.dotc(v);
    let v = v.unscale(v.norm());
    let analytic = 2.0 * (v.dotc(&alpha.apply(&v)).re - lambda);
    let plus = rayleigh(&alpha, &(x + v.scale(h)));
    let minus = rayleigh(&alpha, &(x - v.scale(h)));
    let fd = (plus - 2.0 * lambda + minus) / (h * h);
    Ok((analytic, fd))
}

/// Maximum relative deviation `|fd − analytic| / max(|analytic|, 1)` over
/// random unit directions in the Morse complement.
pub fn hessian_fd_check(psi: &PureState, directions: usize, h: f64, seed: u64) -> Result<f64> {
    let (_, comp, _) = morse_complement(psi, DEFAULT_RANK_TOL);
    let k = comp.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    let mut rng = linalg::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..directions.max(1) {
        let coeffs = linalg::random_complex_vector(k, &mut rng);
        let v = &comp * coeffs;
        let (analytic, fd) = hessian_fd_along(psi, &v, h)?;
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
    }
    Ok(worst)
}

/// Real symmetric Hessian of `f` on the complement in real coordinates,
/// assembled from the analytic quadratic form; used to confirm the factor two.
pub fn real_hessian_on_complement(psi: &PureState) -> Result<DMatrix<f64>> {
    let unit = psi.normalized();
    let alpha = momentum_operator(&momentum(&unit), unit.descriptor())?;
    let lambda = rayleigh(&alpha, unit.amplitudes());
    let (_, comp, _) = morse_complement(psi, DEFAULT_RANK_TOL);
    let k = comp.ncols();
    let dirs: Vec<CVec> = (0..k)
        .flat_map(|j| {
            let col = comp.column(j).into_owned();
            [col.clone(), col.map(|z| z * c(0.0, 1.0))]
        })
        .collect();
    let shifted = |v: &CVec| alpha.apply(v) - v.scale(lambda);
    Ok(DMatrix::from_fn(2 * k, 2 * k, |a, b| 2.0 * dirs[a].dotc(&shifted(&dirs[b])).re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::ONE;

    fn basis_vec(psi: &PureState, labels: &[usize]) -> CVec {
        let mut v = CVec::zeros(psi.dim());
        v[psi.basis().position_of_labels(labels).unwrap()] = ONE;
        v
    }

    #[test]
    fn complement_of_w_is_the_111_line() {
        let w = catalog::w();
        let ts = tangent_slocc(&w, DEFAULT_RANK_TOL);
        assert_eq!(ts.complement_dim(), 1);
        assert_eq!(ts.dim() + ts.complement_dim(), 8);
        assert!(ts.distance_from_complement(&basis_vec(&w, &[2, 2, 2])) < 1e-8);
    }

    #[test]
    fn complement_of_psi2_is_zero() {
        let ts = tangent_slocc(&catalog::wedge_psi2(), DEFAULT_RANK_TOL);
        assert_eq!(ts.complement_dim(), 0);
        assert_eq!(ts.dim(), 10);
    }

    #[test]
    fn complement_of_separable_state() {
        let sep = catalog::separable();
        let ts = tangent_slocc(&sep, DEFAULT_RANK_TOL);
        assert_eq!(ts.complement_dim(), 4);
        for labels in [[2, 2, 1], [2, 1, 2], [1, 2, 2], [2, 2, 2]] {
            assert!(ts.distance_from_complement(&basis_vec(&sep, &labels)) < 1e-8);
        }
    }

    #[test]
    fn tangent_contains_every_generator_image() {
        for (_, psi, _) in catalog::example_critical_points() {
            let ts = tangent_slocc(&psi, DEFAULT_RANK_TOL);
            let obs = observables_for(psi.descriptor());
            let unit = psi.normalized();
            for i in 0..obs.len() {
                let v = obs.apply(i, unit.amplitudes());
                if v.norm() > 1e-12 {
                    assert!(ts.distance_from_span(&v) < 1e-8);
                    assert!(ts.distance_from_span(&v.map(|z| z * c(0.0, 1.0))) < 1e-8);
                }
            }
            let gram = ts.basis.adjoint() * &ts.basis;
            assert!(linalg::max_abs(&(gram - CMat::identity(ts.dim(), ts.dim()))) < 1e-10);
            let cross = ts.basis.adjoint() * &ts.complement_basis;
            assert!(cross.iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn example_indices() {
        for (name, psi, expected) in catalog::example_critical_points() {
            let alpha = momentum_operator(&momentum(&psi), psi.descriptor()).unwrap();
            let lambda = alpha.rayleigh_quotient(psi.amplitudes());
            let m = morse_index(&psi, lambda, DEFAULT_RANK_TOL, DEFAULT_INDEX_TOL).unwrap();
            assert_eq!(m.index, expected, "{name}: {m:?}");
            assert_eq!(m.index % 2, 0);
            assert!(m.index as usize <= 2 * m.complement_dim);
        }
    }

    #[test]
    fn ghz_is_projected_out_of_its_own_complement() {
        let m = morse_index(&catalog::ghz(), 0.0, DEFAULT_RANK_TOL, DEFAULT_INDEX_TOL).unwrap();
        assert!(!m.state_in_tangent);
        assert_eq!(m.complement_dim, 1);
        assert!(m.compressed_eigenvalues.is_empty());
    }

    #[test]
    fn finite_difference_examples() {
        let w = catalog::w();
        let (analytic, fd) = hessian_fd_along(&w, &basis_vec(&w, &[2, 2, 2]), 1e-4).unwrap();
        assert!((analytic + 4.0 / 3.0).abs() < 1e-12);
        assert!((fd - analytic).abs() < 1e-4);

        let ghz = catalog::ghz();
        let (analytic, fd) = hessian_fd_along(&ghz, &basis_vec(&ghz, &[2, 1, 1]), 1e-4).unwrap();
        assert!(analytic.abs() < 1e-15 && fd.abs() < 1e-6);

        let sep = catalog::separable();
        let (analytic, fd) = hessian_fd_along(&sep, &basis_vec(&sep, &[2, 2, 2]), 1e-4).unwrap();
        assert!((analytic + 6.0).abs() < 1e-12);
        assert!((fd - analytic).abs() < 1e-4);
    }

    #[test]
    fn fd_check_on_examples() {
        for (name, psi, _) in catalog::example_critical_points() {
            let dev = hessian_fd_check(&psi, 8, 1e-4, 1).unwrap();
            assert!(dev < 1e-3, "{name}: {dev}");
        }
    }

    #[test]
    fn real_hessian_pairs_directions() {
        let h = real_hessian_on_complement(&catalog::separable()).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h);
        let negatives = eig.eigenvalues.iter().filter(|&&e| e < -1e-9).count();
        assert_eq!(negatives, 8);
    }
}
