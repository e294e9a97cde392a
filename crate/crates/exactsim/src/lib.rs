//! Non-perturbative oracle: qubit detectors ⊗ a truncated Fock space of
//! cavity modes, evolved exactly (up to a midpoint step error) under the
//! full time-dependent interaction Hamiltonian.
//!
//! Basis ordering: detector qubits first (scenario order, most significant
//! bit first, `0 = ground`), then the Fock basis of the retained modes.
//! The state of detector `q` and Fock state `f` sits at index
//! `s · F + f` with `s` the qubit bit string.

mod evolve;
mod hamiltonian;
mod kick;
mod probes;
mod space;
mod state;

pub use evolve::{scattering, OracleOptions, Propagator};
pub use hamiltonian::hamiltonian_at;
pub use kick::{weyl_kick, KickOperator};
pub use probes::{
    coupling_derivative, excitation_probability, factorization_residual, final_detector_state,
    mixed_coupling_derivative, order_probe_k, sorkin_probe, sorkin_slope, Estimate, FactorizationResidual, KProbe,
    Preparation, SorkinPoint, StateEstimate,
};
pub use space::{FockBasis, SpaceInfo, Truncation, DENSE_CAP};
pub use state::{nonselective_measure, reduced_detector_state, ExactState, Member};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("halving the time step changed {what} by {change:.3e} (tolerance {tolerance:.1e})")]
    StepTooCoarse { what: String, change: f64, tolerance: f64 },
    #[error("top Fock sector holds population {population:.3e} (tolerance {tolerance:.1e}); raise the cutoff")]
    TruncationLeak { population: f64, tolerance: f64 },
    #[error("dense operation on dimension {dim} exceeds the cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] cdl_perturbation::PerturbationError),
    #[error(transparent)]
    Detector(#[from] cdl_detector::DetectorError),
    #[error(transparent)]
    Field(#[from] cdl_field::FieldError),
}
