use cdl_detector::Label;
use cdl_geometry::{classify_causal, CausalRelation, Convention, Region};

use crate::engine::{dyson_series, SeriesOptions};
use crate::{PerturbationError, Scenario};

/// Coefficient of `λ_A² λ_B λ_f` in `p_B = ⟨e|ρ_B|e⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorkinCoefficient {
    pub value: f64,
    pub error: f64,
    /// Largest entry of the joint series matrix, the scale of the quadrature check.
    pub reference: f64,
}

impl SorkinCoefficient {
    /// `∂p_B/∂λ_f` at the given couplings.
    pub fn slope(&self, lambda_a: f64, lambda_b: f64) -> f64 {
        self.value * lambda_a * lambda_a * lambda_b
    }
}

/// Some point of `r` lies in the causal future of some point of `src`.
fn future_reaches(src: &Region, r: &Region) -> bool {
    r.t_max - src.t_min >= src.x_gap(r)
}

/// Checks the three-region geometry: kick spacelike to B, and A reaching
/// both the future of the kick and the past of B.
pub fn check_sorkin_geometry(scen: &Scenario) -> Result<(), PerturbationError> {
    let c = scen
        .kick_region()
        .ok_or_else(|| PerturbationError::GeometryViolation("scenario has no kick".into()))?;
    let a = scen.require(Label::A)?.support();
    let b = scen.require(Label::B)?.support();
    let rel = classify_causal(&c, &b, Convention::Closed)?;
    if rel != CausalRelation::Spacelike {
        return Err(PerturbationError::GeometryViolation(format!("kick and B are {rel}, not spacelike")));
    }
    if !future_reaches(&c, &a) {
        return Err(PerturbationError::GeometryViolation("A does not meet the future of the kick".into()));
    }
    if !future_reaches(&a, &b) {
        return Err(PerturbationError::GeometryViolation("A does not meet the past of B".into()));
    }
    Ok(())
}

pub fn sorkin_coefficient(scen: &Scenario) -> Result<SorkinCoefficient, PerturbationError> {
    check_sorkin_geometry(scen)?;
    let mut s = scen.clone();
    s.detectors.retain(|d| matches!(d.label, Label::A | Label::B));
    let opts = SeriesOptions { max_order: 3, max_kick_order: 1, steps: None };
    let series = dyson_series(&s, &opts)?;
    let key = series.key(&[(Label::A, 2), (Label::B, 1)], 1)?;
    let value = series.excitation(&key, Label::B).re;
    let error = series.excitation_error(&key);
    let reference = series.magnitude(&key);
    let change = error / value.abs().max(reference);
    if change > scen.resolution.tolerance {
        return Err(PerturbationError::QuadratureNotConverged {
            what: "sorkin_coefficient".into(),
            change,
            tolerance: scen.resolution.tolerance,
        });
    }
    Ok(SorkinCoefficient { value, error, reference })
}
