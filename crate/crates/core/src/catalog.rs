//! Named example states for three qubits and three fermions in five orbitals.

use num_complex::Complex64;

use crate::linalg::c;
use crate::{PureState, SystemDescriptor};

pub fn qubits3() -> SystemDescriptor {
    SystemDescriptor::distinguishable(2, 3).expect("valid")
}

pub fn wedge35() -> SystemDescriptor {
    SystemDescriptor::fermionic(5, 3).expect("valid")
}

fn qubit_terms(terms: &[([usize; 3], f64)]) -> PureState {
    // bit strings in the 0/1 convention map to labels 1/2
    let labelled: Vec<([usize; 3], Complex64)> =
        terms.iter().map(|(bits, a)| ([bits[0] + 1, bits[1] + 1, bits[2] + 1], c(*a, 0.0))).collect();
    let refs: Vec<(&[usize], Complex64)> = labelled.iter().map(|(l, a)| (&l[..], *a)).collect();
    PureState::from_terms(qubits3(), &refs).expect("valid qubit state")
}

/// `(|000> + |111>)/√2`.
pub fn ghz() -> PureState {
    let s = 0.5f64.sqrt();
    qubit_terms(&[([0, 0, 0], s), ([1, 1, 1], s)])
}

/// `(|100> + |010> + |001>)/√3`.
pub fn w() -> PureState {
    let s = (1.0f64 / 3.0).sqrt();
    qubit_terms(&[([1, 0, 0], s), ([0, 1, 0], s), ([0, 0, 1], s)])
}

/// Biseparable state with the pure factor on qubit `k ∈ {1,2,3}`, e.g.
/// `(|100> + |111>)/√2` for `k = 1`.
pub fn biseparable(k: usize) -> PureState {
    assert!((1..=3).contains(&k), "qubit index must be 1, 2 or 3");
    let s = 0.5f64.sqrt();
    let mut flip = [0, 0, 0];
    flip[k - 1] = 1;
    qubit_terms(&[(flip, s), ([1, 1, 1], s)])
}

/// `|000>`.
pub fn separable() -> PureState {
    qubit_terms(&[([0, 0, 0], 1.0)])
}

/// `p|011> + q|101> + r|110> + s|111> + z|000>`.
pub fn three_qubit_canonical(p: Complex64, q: Complex64, r: Complex64, s: Complex64, z: Complex64) -> crate::Result<PureState> {
    let terms: [([usize; 3], Complex64); 5] =
        [([1, 2, 2], p), ([2, 1, 2], q), ([2, 2, 1], r), ([2, 2, 2], s), ([1, 1, 1], z)];
    let refs: Vec<(&[usize], Complex64)> = terms.iter().map(|(l, a)| (&l[..], *a)).collect();
    PureState::from_terms(qubits3(), &refs)
}

/// `|1,2,3>`.
pub fn wedge_psi1() -> PureState {
    PureState::basis_state(wedge35(), &[1, 2, 3]).expect("valid")
}

/// `(|1,2,3> + |1,4,5>)/√2`.
pub fn wedge_psi2() -> PureState {
    let s = c(0.5f64.sqrt(), 0.0);
    PureState::from_terms(wedge35(), &[(&[1, 2, 3], s), (&[1, 4, 5], s)]).expect("valid")
}

/// The eight example critical points with their expected Morse indices.
pub fn example_critical_points() -> Vec<(&'static str, PureState, u32)> {
    vec![
        ("GHZ", ghz(), 0),
        ("W", w(), 2),
        ("BS1", biseparable(1), 6),
        ("BS2", biseparable(2), 6),
        ("BS3", biseparable(3), 6),
        ("SEP", separable(), 8),
        ("psi1", wedge_psi1(), 6),
        ("psi2", wedge_psi2(), 0),
    ]
}
