//! Pure states, inner products, and the local group / Lie-algebra actions.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::apply_single_site;
use crate::linalg::{self, CMat, CVec, ONE, ZERO};
use crate::system::{Basis, BasisIndex, ParticleKind, SystemDescriptor};
use crate::{Error, Result};

/// Nonzero vector over the canonical basis. The norm is never assumed to be one.
#[derive(Clone)]
pub struct PureState {
    basis: Arc<Basis>,
    amplitudes: CVec,
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PureState")
            .field("system", &self.descriptor().to_string())
            .field("amplitudes", &self.amplitudes.as_slice())
            .finish()
    }
}

impl PureState {
    pub fn new(descriptor: SystemDescriptor, amplitudes: CVec) -> Result<Self> {
        let basis = descriptor.basis();
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: amplitudes.len() });
        }
        if amplitudes.norm_squared() == 0.0 || !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::ZeroVector);
        }
        Ok(PureState { basis, amplitudes })
    }

    pub fn from_slice(descriptor: SystemDescriptor, amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(descriptor, CVec::from_column_slice(amplitudes))
    }

    /// Superposition of basis vectors given by 1-based labels.
    pub fn from_terms(descriptor: SystemDescriptor, terms: &[(&[usize], Complex64)]) -> Result<Self> {
        let basis = descriptor.basis();
        let mut amps = CVec::zeros(basis.len());
        for (labels, amp) in terms {
            amps[basis.position_of_labels(labels)?] += *amp;
        }
        Self::new(descriptor, amps)
    }

    pub fn basis_state(descriptor: SystemDescriptor, labels: &[usize]) -> Result<Self> {
        Self::from_terms(descriptor, &[(labels, ONE)])
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        self.basis.descriptor()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalized(&self) -> PureState {
        let n = self.amplitudes.norm();
        PureState { basis: Arc::clone(&self.basis), amplitudes: self.amplitudes.unscale(n) }
    }

    pub fn scaled(&self, z: Complex64) -> Result<PureState> {
        PureState::new(self.descriptor(), self.amplitudes.map(|a| a * z))
    }

    /// Replaces the amplitudes, keeping the system.
    pub fn with_amplitudes(&self, amplitudes: CVec) -> Result<PureState> {
        if amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: amplitudes.len() });
        }
        PureState::new(self.descriptor(), amplitudes)
    }

    pub fn amplitude(&self, labels: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.basis.position_of_labels(labels)?])
    }

    /// `|<self|other>|² / (<self|self><other|other>)`.
    pub fn overlap_sq(&self, other: &PureState) -> Result<f64> {
        let ip = inner_product(self, other)?;
        Ok(ip.norm_sqr() / (self.norm_sq() * other.norm_sq()))
    }

    /// `A₁⊗…⊗A_L|ψ>`, or `A⊗…⊗A` restricted to the (anti)symmetric space.
    ///
    /// Distinguishable systems take one matrix per site; identical particles
    /// take a single matrix applied to every factor.
    pub fn apply_local(&self, ops: &[CMat]) -> Result<PureState> {
        let out = apply_local_vec(&self.basis, &self.amplitudes, ops)?;
        PureState::new(self.descriptor(), out)
    }

    /// Derivation action `Σ_k X_k^{(k)} |ψ>`; the image may be the zero vector,
    /// so a raw vector is returned.
    pub fn apply_algebra_element(&self, elems: &[CMat]) -> Result<CVec> {
        apply_algebra_vec(&self.basis, &self.amplitudes, elems)
    }
}

pub fn inner_product(psi: &PureState, phi: &PureState) -> Result<Complex64> {
    if psi.descriptor() != phi.descriptor() {
        return Err(Error::DescriptorMismatch(psi.descriptor().to_string(), phi.descriptor().to_string()));
    }
    Ok(psi.amplitudes.dotc(&phi.amplitudes))
}

/// Standard complex Gaussian amplitudes, normalized; deterministic per seed.
pub fn random_state(descriptor: SystemDescriptor, seed: u64) -> PureState {
    let mut rng = linalg::rng(seed);
    let v = linalg::random_complex_vector(descriptor.dimension(), &mut rng);
    let n = v.norm();
    PureState::new(descriptor, v.unscale(n)).expect("gaussian vector is nonzero")
}

fn check_ops(desc: SystemDescriptor, ops: &[CMat]) -> Result<()> {
    let expected = desc.num_components();
    if ops.len() != expected {
        return Err(Error::Arity { expected, got: ops.len() });
    }
    for m in ops {
        if m.nrows() != desc.local_dim() || m.ncols() != desc.local_dim() {
            return Err(Error::DimensionMismatch { expected: desc.local_dim(), got: m.nrows().max(m.ncols()) });
        }
    }
    Ok(())
}

pub(crate) fn apply_local_vec(basis: &Basis, amps: &CVec, ops: &[CMat]) -> Result<CVec> {
    let desc = basis.descriptor();
    check_ops(desc, ops)?;
    match desc.kind() {
        ParticleKind::Distinguishable => {
            let mut cur = amps.clone();
            for (site, a) in ops.iter().enumerate() {
                cur = apply_single_site(basis, &cur, site, a);
            }
            Ok(cur)
        }
        kind => {
            let a = &ops[0];
            let l = desc.num_particles();
            let mut out = CVec::zeros(basis.len());
            for (col, amp) in amps.iter().enumerate() {
                if *amp == ZERO {
                    continue;
                }
                let cols = basis.index(col).orbitals();
                for (row, out_entry) in out.iter_mut().enumerate() {
                    let rows = basis.index(row).orbitals();
                    let minor = CMat::from_fn(l, l, |r, c| a[(rows[r], cols[c])]);
                    let coeff = match kind {
                        ParticleKind::Fermionic => linalg::determinant(&minor),
                        _ => linalg::permanent(&minor) / (multiplicity_factorial(rows) * multiplicity_factorial(cols)).sqrt(),
                    };
                    *out_entry += coeff * amp;
                }
            }
            Ok(out)
        }
    }
}

fn multiplicity_factorial(orbs: &[usize]) -> f64 {
    let mut prod = 1.0;
    let mut run = 1;
    for w in orbs.windows(2) {
        if w[0] == w[1] {
            run += 1;
            prod *= run as f64;
        } else {
            run = 1;
        }
    }
    prod
}

pub(crate) fn apply_algebra_vec(basis: &Basis, amps: &CVec, elems: &[CMat]) -> Result<CVec> {
    let desc = basis.descriptor();
    check_ops(desc, elems)?;
    match desc.kind() {
        ParticleKind::Distinguishable => {
            let mut out = CVec::zeros(amps.len());
            for (site, x) in elems.iter().enumerate() {
                out += apply_single_site(basis, amps, site, x);
            }
            Ok(out)
        }
        _ => Ok(apply_one_body(basis, amps, &elems[0])),
    }
}

/// `Σ_{pq} X_{pq} a†_p a_q` on an identical-particle basis.
pub(crate) fn apply_one_body(basis: &Basis, amps: &CVec, x: &CMat) -> CVec {
    let mut out = CVec::zeros(amps.len());
    for (src, amp) in amps.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        for hop in basis.hops(src) {
            let xv = x[(hop.create, hop.annihilate)];
            if xv != ZERO {
                out[hop.target] += xv * hop.coeff * amp;
            }
        }
    }
    out
}

/// One entry of the JSON state file: 1-based labels and a complex amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeEntry {
    pub index: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// On-disk state format. Unlisted basis vectors have amplitude zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub kind: ParticleKind,
    pub local_dim: usize,
    pub num_particles: usize,
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl StateFile {
    /// Sparse listing of the nonzero amplitudes of `psi`, as stored.
    pub fn from_state(psi: &PureState) -> StateFile {
        let d = psi.descriptor();
        let amplitudes = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(i, z)| AmplitudeEntry { index: psi.basis().index(i).labels(), re: z.re, im: z.im })
            .collect();
        StateFile { kind: d.kind(), local_dim: d.local_dim(), num_particles: d.num_particles(), amplitudes }
    }

    pub fn to_state(&self) -> Result<PureState> {
        let desc = SystemDescriptor::new(self.kind, self.local_dim, self.num_particles)
            .map_err(|e| Error::Malformed { field: "kind/local_dim/num_particles".into(), reason: e.to_string() })?;
        let basis = desc.basis();
        let mut amps = CVec::zeros(basis.len());
        let mut seen = HashSet::new();
        for (k, entry) in self.amplitudes.iter().enumerate() {
            let field = format!("amplitudes[{k}].index");
            let idx = BasisIndex::from_labels(&desc, &entry.index)
                .map_err(|e| Error::Malformed { field: field.clone(), reason: e.to_string() })?;
            if !seen.insert(idx.clone()) {
                return Err(Error::Malformed { field, reason: format!("duplicate index {:?}", entry.index) });
            }
            if !entry.re.is_finite() || !entry.im.is_finite() {
                return Err(Error::Malformed { field: format!("amplitudes[{k}]"), reason: "non-finite amplitude".into() });
            }
            let pos = basis.position(&idx).expect("validated index is in basis");
            amps[pos] = Complex64::new(entry.re, entry.im);
        }
        PureState::new(desc, amps).map_err(|e| match e {
            Error::ZeroVector => Error::Malformed { field: "amplitudes".into(), reason: "zero vector".into() },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<PureState> {
        let file: StateFile = serde_json::from_str(text)?;
        file.to_state()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<PureState> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(psi: &PureState) -> String {
        serde_json::to_string_pretty(&StateFile::from_state(psi)).expect("state file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, random_hermitian, random_unitary, unitary_exp};

    fn qubits3() -> SystemDescriptor {
        SystemDescriptor::distinguishable(2, 3).unwrap()
    }

    fn wedge35() -> SystemDescriptor {
        SystemDescriptor::fermionic(5, 3).unwrap()
    }

    fn ghz() -> PureState {
        let s = 1.0 / 2f64.sqrt();
        PureState::from_terms(qubits3(), &[(&[1, 1, 1], c(s, 0.0)), (&[2, 2, 2], c(s, 0.0))]).unwrap()
    }

    #[test]
    fn inner_products() {
        let e1 = PureState::basis_state(qubits3(), &[1, 1, 1]).unwrap();
        let e2 = PureState::basis_state(qubits3(), &[1, 2, 1]).unwrap();
        assert_eq!(inner_product(&e1, &e1).unwrap(), ONE);
        assert_eq!(inner_product(&e1, &e2).unwrap(), ZERO);
        assert!((inner_product(&ghz(), &e1).unwrap() - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        let f = PureState::basis_state(wedge35(), &[1, 2, 3]).unwrap();
        assert!(inner_product(&e1, &f).is_err());
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let a = random_state(qubits3(), 1);
        let b = random_state(qubits3(), 2);
        let z = c(0.3, -1.2);
        let lhs = inner_product(&a.scaled(z).unwrap(), &b).unwrap();
        let rhs = z.conj() * inner_product(&a, &b).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(PureState::new(qubits3(), CVec::zeros(8)), Err(Error::ZeroVector)));
        assert!(PureState::new(qubits3(), CVec::zeros(7)).is_err());
    }

    #[test]
    fn identity_and_bit_flip() {
        let psi = random_state(qubits3(), 4);
        let id = vec![CMat::identity(2, 2); 3];
        let out = psi.apply_local(&id).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-15);

        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let e000 = PureState::basis_state(qubits3(), &[1, 1, 1]).unwrap();
        let flipped = e000.apply_local(&[x, CMat::identity(2, 2), CMat::identity(2, 2)]).unwrap();
        assert_eq!(flipped.amplitude(&[2, 1, 1]).unwrap(), ONE);
        assert!((flipped.norm_sq() - 1.0).abs() < 1e-15);
    }

    fn permutation(n: usize, a: usize, b: usize) -> CMat {
        let mut m = CMat::identity(n, n);
        m.swap_rows(a, b);
        m
    }

    #[test]
    fn fermionic_permutation_signs() {
        let psi = PureState::basis_state(wedge35(), &[1, 2, 3]).unwrap();
        // 1↔4 maps |1>∧|2>∧|3> to |4>∧|2>∧|3> = +|2,3,4> (a cyclic reordering).
        let out = psi.apply_local(&[permutation(5, 0, 3)]).unwrap();
        assert!((out.amplitude(&[2, 3, 4]).unwrap() - ONE).norm() < 1e-12);
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
        // Swapping two occupied orbitals flips the sign.
        let out = psi.apply_local(&[permutation(5, 0, 1)]).unwrap();
        assert!((out.amplitude(&[1, 2, 3]).unwrap() + ONE).norm() < 1e-12);
        let out = psi.apply_local(&[permutation(5, 1, 2)]).unwrap();
        assert!((out.amplitude(&[1, 2, 3]).unwrap() + ONE).norm() < 1e-12);
    }

    #[test]
    fn arity_and_shape_errors() {
        let psi = random_state(qubits3(), 5);
        assert!(matches!(psi.apply_local(&[CMat::identity(2, 2)]), Err(Error::Arity { expected: 3, got: 1 })));
        assert!(psi.apply_local(&vec![CMat::identity(3, 3); 3]).is_err());
        let f = random_state(wedge35(), 5);
        assert!(matches!(f.apply_local(&vec![CMat::identity(5, 5); 3]), Err(Error::Arity { expected: 1, got: 3 })));
    }

    #[test]
    fn algebra_element_examples() {
        let e000 = PureState::basis_state(qubits3(), &[1, 1, 1]).unwrap();
        let zero = vec![CMat::zeros(2, 2); 3];
        assert_eq!(e000.apply_algebra_element(&zero).unwrap().norm(), 0.0);
        let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let out = e000.apply_algebra_element(&vec![z; 3]).unwrap();
        assert!((&out - e000.amplitudes().scale(3.0)).norm() < 1e-15);

        let f = PureState::basis_state(wedge35(), &[1, 2, 3]).unwrap();
        let mut n1 = CMat::zeros(5, 5);
        n1[(0, 0)] = ONE;
        let out = f.apply_algebra_element(&[n1]).unwrap();
        assert!((&out - f.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn random_state_contract() {
        let a = random_state(wedge35(), 11);
        let b = random_state(wedge35(), 11);
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert!((a.norm_sq() - 1.0).abs() < 1e-12);
        let other = random_state(wedge35(), 12);
        assert!(inner_product(&a, &other).unwrap().norm() < 1.0 - 1e-6);
    }

    fn systems() -> Vec<SystemDescriptor> {
        vec![
            qubits3(),
            SystemDescriptor::distinguishable(3, 2).unwrap(),
            wedge35(),
            SystemDescriptor::fermionic(4, 2).unwrap(),
            SystemDescriptor::bosonic(3, 3).unwrap(),
            SystemDescriptor::bosonic(2, 4).unwrap(),
        ]
    }

    #[test]
    fn unitaries_preserve_norm() {
        for (k, d) in systems().into_iter().enumerate() {
            let psi = random_state(d, 100 + k as u64);
            let mut r = linalg::rng(k as u64);
            let ops: Vec<CMat> = (0..d.num_components()).map(|_| random_unitary(d.local_dim(), &mut r)).collect();
            let out = psi.apply_local(&ops).unwrap();
            assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn algebra_action_is_derivative_of_group_action() {
        for (k, d) in systems().into_iter().enumerate() {
            let psi = random_state(d, 200 + k as u64);
            let mut r = linalg::rng(300 + k as u64);
            let xs: Vec<CMat> = (0..d.num_components()).map(|_| random_hermitian(d.local_dim(), &mut r)).collect();
            let deriv = psi.apply_algebra_element(&xs).unwrap();
            let err = |t: f64| {
                let us: Vec<CMat> = xs.iter().map(|x| unitary_exp(x, t)).collect();
                let moved = psi.apply_local(&us).unwrap();
                let linear = psi.amplitudes() + deriv.map(|z| z * c(0.0, t));
                (moved.amplitudes() - linear).norm()
            };
            let (e1, e2) = (err(1e-4), err(5e-5));
            assert!(e1 < 1e-6, "{d}: {e1}");
            // quadratic remainder: halving t quarters the error
            let slope = (e1 / e2).log2();
            assert!((slope - 2.0).abs() < 0.1, "{d}: slope {slope}");
        }
    }

    #[test]
    fn state_file_parsing() {
        let text = r#"{"kind":"distinguishable","local_dim":2,"num_particles":3,
            "amplitudes":[{"index":[2,1,1],"re":1.0,"im":0.0},{"index":[1,2,1],"re":1.0,"im":0.0},
                          {"index":[1,1,2],"re":1.0,"im":0.0}]}"#;
        let w = StateFile::parse(text).unwrap();
        assert_eq!(w.amplitude(&[1, 2, 1]).unwrap(), ONE);
        assert_eq!(w.amplitude(&[1, 1, 1]).unwrap(), ZERO);

        let bad = r#"{"kind":"fermionic","local_dim":5,"num_particles":3,"amplitudes":[{"index":[2,1,3],"re":1.0,"im":0.0}]}"#;
        let err = StateFile::parse(bad).unwrap_err().to_string();
        assert!(err.contains("index not strictly increasing") && err.contains("amplitudes[0].index"), "{err}");

        let zero = r#"{"kind":"fermionic","local_dim":5,"num_particles":3,"amplitudes":[{"index":[1,2,3],"re":0.0,"im":0.0}]}"#;
        assert!(StateFile::parse(zero).unwrap_err().to_string().contains("zero vector"));

        let dup = r#"{"kind":"fermionic","local_dim":5,"num_particles":3,"amplitudes":[{"index":[1,2,3],"re":1.0,"im":0.0},{"index":[1,2,3],"re":1.0,"im":0.0}]}"#;
        assert!(StateFile::parse(dup).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn state_file_round_trip() {
        let psi = random_state(SystemDescriptor::bosonic(3, 3).unwrap(), 8);
        let back = StateFile::parse(&StateFile::to_json(&psi)).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
    }
}
