//! Real scalar Klein-Gordon field in a periodic cavity, truncated to modes
//! `n ∈ [−N, N]`.
//!
//! The field is `φ(t, x) = Σ_n (u_n a_n + h.c.)` with
//! `u_n = e^{−iω_n t + i k_n x} / √(2 ω_n L)`. Smeared operators are written as
//! `φ(g) = Σ_n (c_n a_n + c_n* a_n†)`, `c_n = ∫ g u_n`.

mod kernels;
mod profile;
pub mod quadrature;
mod smeared;
mod spec;

pub use kernels::{pauli_jordan, wightman, GaussianFieldState};
pub use profile::{bump, SmearingProfile, SpacetimeFunction, BUMP_AREA};
pub use quadrature::GaussLegendre;
pub use smeared::{
    classical_field, smeared_commutator, smeared_mode_coeffs, smeared_mode_coeffs_checked, Kick,
    ModeCoefficients, RefinementCheck,
};
pub use spec::{FieldSpec, Mode};

pub use cdl_geometry::Real;
pub use num_complex::Complex;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("invalid field specification: {0}")]
    InvalidSpec(String),
    #[error("support [{lo}, {hi}] leaves the cavity [{}, {}]", -half_length, half_length)]
    SupportOutsideDomain { lo: f64, hi: f64, half_length: f64 },
    #[error("state has {got} mode entries, field has {expected}")]
    StateShape { expected: usize, got: usize },
}

pub type FieldSpec64 = FieldSpec<f64>;
pub type FieldSpec32 = FieldSpec<f32>;
pub type SmearingProfile64 = SmearingProfile<f64>;
pub type GaussianFieldState64 = GaussianFieldState<f64>;
pub type ModeCoefficients64 = ModeCoefficients<f64>;
