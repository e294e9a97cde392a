//! Perturbative (Dyson-series) treatment of smeared qubit detectors coupled
//! to a mode-truncated field that may carry a Weyl kick.
//!
//! The kick is removed by the displacement `φ → φ + φ_cl`: the field starts
//! in its vacuum and each detector sees an extra c-number drive. Vacuum
//! correlators are then handled by Wick contraction (see [`engine`]).

mod engine;
mod kernels;
mod response;
mod scenario;
mod series;
mod sorkin;

pub use engine::{dyson_series, SeriesOptions};
pub use kernels::{factorization_defect_leading, signaling_coefficient, FactorizationDefect, Signaling};
pub use response::response_probability;
pub use scenario::{Resolution, Scenario};
pub use series::{assemble, Assembled, PerturbativeSeries, SeriesEntry, SeriesKey, Warning};
pub use sorkin::{check_sorkin_geometry, sorkin_coefficient, SorkinCoefficient};

pub use cdl_detector::Label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("geometry precondition failed: {0}")]
    GeometryViolation(String),
    #[error("quadrature not converged for {what}: change {change:.3e} exceeds tolerance {tolerance:.1e}")]
    QuadratureNotConverged { what: String, change: f64, tolerance: f64 },
    #[error(transparent)]
    Detector(#[from] cdl_detector::DetectorError),
    #[error(transparent)]
    Field(#[from] cdl_field::FieldError),
}

impl From<cdl_geometry::GeometryError> for PerturbationError {
    fn from(e: cdl_geometry::GeometryError) -> Self {
        PerturbationError::GeometryViolation(e.to_string())
    }
}

/// Relative change `|a − b| / max(|b|, floor)`.
pub(crate) fn relative_change(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
