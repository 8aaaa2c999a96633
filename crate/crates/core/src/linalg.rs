//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a path of task coordinates (splitmix64 finalizer),
/// so that per-task streams do not depend on scheduling order.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut z = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in path {
        z = z.wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9)).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn random_complex_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

/// GUE-like random Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| complex_gaussian(rng));
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_traceless_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut h = random_hermitian(n, rng);
    let shift = h.trace() / Complex64::from(n as f64);
    for i in 0..n {
        h[(i, i)] -= shift;
    }
    h
}

/// Random unitary `exp(iH)` with `H` drawn from [`random_hermitian`].
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let h = random_hermitian(n, rng);
    unitary_exp(&h, 1.0)
}

/// `exp(i t H)` for Hermitian `H` through its eigendecomposition.
pub fn unitary_exp(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = CVec::from_iterator(vals.len(), vals.iter().map(|&v| (I * t * v).exp()));
    &vecs * CMat::from_diagonal(&phases) * vecs.adjoint()
}

/// Matrix exponential of a general complex matrix.
pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Eigenvalues in ascending order with the matching eigenvector columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hilbert–Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vdot(a: &CVec, b: &CVec) -> Complex64 {
    a.dotc(b)
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n))) < tol
}

/// Determinant of a small square complex matrix by partial pivoting.
pub fn determinant(m: &CMat) -> Complex64 {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    m.clone().lu().determinant()
}

/// Permanent by Ryser's formula; intended for the small particle numbers of
/// bosonic minors.
pub fn permanent(m: &CMat) -> Complex64 {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    let mut total = ZERO;
    for subset in 1u64..(1u64 << n) {
        let mut prod = ONE;
        for r in 0..n {
            let mut row_sum = ZERO;
            for col in 0..n {
                if subset & (1 << col) != 0 {
                    row_sum += m[(r, col)];
                }
            }
            prod *= row_sum;
        }
        let k = subset.count_ones() as usize;
        if (n - k) % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permanent_matches_leibniz() {
        let mut r = rng(3);
        let m = CMat::from_fn(3, 3, |_, _| complex_gaussian(&mut r));
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let brute: Complex64 = perms.iter().map(|p| m[(0, p[0])] * m[(1, p[1])] * m[(2, p[2])]).sum();
        assert!((permanent(&m) - brute).norm() < 1e-12);
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let mut r = rng(5);
        let h = random_hermitian(4, &mut r);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(4, vals.iter().map(|&v| c(v, 0.0))));
        assert!(max_abs(&(&vecs * d * vecs.adjoint() - h)) < 1e-10);
    }

    #[test]
    fn exponentials_are_consistent() {
        let mut r = rng(9);
        let h = random_hermitian(3, &mut r);
        let u = unitary_exp(&h, 0.7);
        assert!(is_unitary(&u, 1e-12));
        let via_pade = expm(&h.map(|z| z * I * 0.7));
        assert!(max_abs(&(u - via_pade)) < 1e-10);
    }

    #[test]
    fn derived_seeds_differ_by_path() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(7, &[2, 3]), derive_seed(7, &[2, 3]));
    }
}
