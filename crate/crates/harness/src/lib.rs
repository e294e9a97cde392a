//! Scenario files, experiment runners and result serialisation for the
//! `cdl` tool.
//!
//! A scenario is a TOML document (see [`ScenarioFile`]). Experiments turn
//! it into a [`ResultRecord`]: named scalars, tables, claims that pair each
//! "vanishes" statement with its measured floor, and an error budget.

mod converge;
mod experiments;
mod load;
mod record;
mod scenario_file;

pub use converge::{convergence_scan, fitted_order, Observable, ScanParameter};
pub use experiments::{run_batch, run_experiment, Experiment};
pub use load::{apply_override, load_scenario, parse_scenario, LoadedScenario};
pub use record::{Cell, Claim, ClaimKind, ErrorBudget, ResultRecord, Table, CSV_SCHEMA};
pub use scenario_file::{
    DetectorSection, FieldSection, InitialState, KickSection, MeasurementBasis, OracleSection, PairSection,
    ProbeSection, ResolutionSection, ScanSection, ScenarioFile, SmearingSection, Tolerances, TruncationKind, WindowSection,
};

use cdl_exactsim::ExactError;
use cdl_perturbation::PerturbationError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid override {0:?}: expected key=value")]
    Override(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("geometry violation: {0}")]
    Geometry(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for numerics that did not
    /// converge, 1 for output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Read { .. }
            | HarnessError::Schema { .. }
            | HarnessError::Override(_)
            | HarnessError::Validation(_)
            | HarnessError::Geometry(_) => 2,
            HarnessError::Convergence(_) => 3,
            HarnessError::Write { .. } => 1,
        }
    }
}

impl From<PerturbationError> for HarnessError {
    fn from(e: PerturbationError) -> Self {
        match e {
            PerturbationError::GeometryViolation(m) => HarnessError::Geometry(m),
            PerturbationError::QuadratureNotConverged { .. } => HarnessError::Convergence(e.to_string()),
            other => HarnessError::Validation(other.to_string()),
        }
    }
}

impl From<ExactError> for HarnessError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Scenario(p) => p.into(),
            ExactError::StepTooCoarse { .. } | ExactError::TruncationLeak { .. } => HarnessError::Convergence(e.to_string()),
            other => HarnessError::Validation(other.to_string()),
        }
    }
}

impl From<cdl_field::FieldError> for HarnessError {
    fn from(e: cdl_field::FieldError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

impl From<cdl_detector::DetectorError> for HarnessError {
    fn from(e: cdl_detector::DetectorError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

impl From<cdl_geometry::GeometryError> for HarnessError {
    fn from(e: cdl_geometry::GeometryError) -> Self {
        HarnessError::Geometry(e.to_string())
    }
}
