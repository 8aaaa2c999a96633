//! Detection and classification of SLOCC entanglement classes of pure states
//! of distinguishable qudits, bosons and fermions.
//!
//! The total variance of a state under the local unitary group equals the
//! Casimir constant minus the squared norm of the momentum map, so the
//! critical points of the variance are the states that are eigenvectors of
//! their own momentum operator. This crate computes the momentum map
//! (reduced one-particle density matrices), sweeps the momentum polytope
//! for critical states and evaluates the Morse index of each critical point.

pub mod algebra;
pub mod catalog;
pub mod critical;
mod error;
pub mod linalg;
pub mod momentum;
pub mod morse;
pub mod polytope;
pub mod state;
pub mod system;
pub mod verify;

pub use algebra::{casimir_constant, casimir_rational, gell_mann_basis, lift_observables, AlgebraBasis, LiftedObservableSet};
pub use critical::{
    analyze_point, build_alpha, classify_at_points, classify_system, classify_with_predicate, eigenspaces, is_critical,
    is_zero_momentum, solve_in_eigenspace, standardize, AlphaOperator, Branch, Classification, CriticalPoint,
    Criticality, Eigenspace, ExactValues, Fingerprint, SearchOptions,
};
pub use error::{Error, Result};
pub use linalg::CMat;
pub use momentum::{
    expectation_norm_sq, momentum, momentum_norm_sq, momentum_operator, reduced_density, total_variance,
    DensityMatrix, MomentumValue,
};
pub use morse::{hessian_fd_check, morse_index, tangent_slocc, MorseIndex, TangentSpace};
pub use verify::{run_all as verify_all, PropertyOutcome};
pub use polytope::{
    critical_spectrum_constraints_wedge35, enumerate_candidates, membership_three_qubit, spectrum_point,
    MembershipPredicate, SpectrumEstimate, SpectrumPoint,
};
pub use state::{inner_product, random_state, PureState, StateFile};
pub use system::{basis_enumerate, Basis, BasisIndex, ParticleKind, SystemDescriptor};

pub use num_complex::Complex64;
pub use num_rational::Rational64;
