//! Static qubit detectors with separable compact smearings.
//!
//! A detector couples through `λ χ(t) J(t) ⊗ ∫ F(x) φ(t, x) dx`, with the
//! monopole `J(t) = e^{iΩt} σ⁺ + e^{−iΩt} σ⁻` in the basis `(ground, excited)`
//! as the default current.

mod op2;
mod spec;

pub use op2::{monopole, Op2};
pub use spec::{
    commutator_floor, detector_form_factor, interaction_weight, pointlike_limit,
    smeared_pauli_jordan, Current, DetectorSpec, FormFactor, Label,
};

pub use cdl_field::SmearingProfile;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("invalid initial state for detector {label}: {reason}")]
    InvalidState { label: String, reason: String },
    #[error("invalid smearing: {0}")]
    InvalidSmearing(String),
    #[error(transparent)]
    Field(#[from] cdl_field::FieldError),
}

pub type DetectorSpec64 = DetectorSpec<f64>;
pub type DetectorSpec32 = DetectorSpec<f32>;
pub type Op2c64 = Op2<f64>;
pub type FormFactor64 = FormFactor<f64>;
