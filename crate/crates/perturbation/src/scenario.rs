use cdl_detector::{DetectorSpec, Label};
use cdl_field::{FieldSpec, Kick};
use cdl_geometry::Region;

use crate::PerturbationError;

/// Time-grid and quadrature settings shared by the perturbative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Uniform time steps over the window (the refined pass uses twice as many).
    pub steps: usize,
    /// Gauss-Legendre points per axis for form factors and 1D transforms.
    pub quad_order: usize,
    /// Relative tolerance of the refinement self-checks.
    pub tolerance: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { steps: 400, quad_order: 48, tolerance: 1e-4 }
    }
}

/// Field, detectors, optional kick, and the simulated time window.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub field: FieldSpec,
    pub detectors: Vec<DetectorSpec>,
    pub kick: Option<Kick>,
    pub window: (f64, f64),
    pub resolution: Resolution,
    /// Mode cutoff of the c-number drive produced by the kick.
    pub classical_modes: usize,
}

impl Scenario {
    pub fn new(field: FieldSpec, detectors: Vec<DetectorSpec>, window: (f64, f64)) -> Self {
        Self {
            field,
            detectors,
            kick: None,
            window,
            resolution: Resolution::default(),
            classical_modes: 256,
        }
    }

    pub fn with_kick(mut self, kick: Kick) -> Self {
        self.kick = Some(kick);
        self
    }

    pub fn detector(&self, label: Label) -> Option<&DetectorSpec> {
        self.detectors.iter().find(|d| d.label == label)
    }

    pub(crate) fn require(&self, label: Label) -> Result<&DetectorSpec, PerturbationError> {
        self.detector(label)
            .ok_or_else(|| PerturbationError::InvalidScenario(format!("no detector {label}")))
    }

    pub fn classical_field_spec(&self) -> FieldSpec {
        self.field.with_cutoff(self.classical_modes.max(1))
    }

    pub fn kick_region(&self) -> Option<Region> {
        self.kick.as_ref().map(|k| k.profile.support())
    }

    /// Spatial extent of the union of all supports.
    pub fn spatial_extent(&self) -> f64 {
        let mut regions: Vec<Region> = self.detectors.iter().map(|d| d.support()).collect();
        regions.extend(self.kick_region());
        match regions.split_first() {
            None => 0.0,
            Some((first, rest)) => rest.iter().fold(*first, |h, r| h.hull(r)).extent(),
        }
    }

    pub fn validate(&self) -> Result<(), PerturbationError> {
        let bad = |m: String| Err(PerturbationError::InvalidScenario(m));
        let (t0, t1) = self.window;
        if !(t0 < t1) {
            return bad(format!("window [{t0}, {t1}] is empty"));
        }
        if self.detectors.len() > 3 {
            return bad("at most three detectors are supported".into());
        }
        for (i, d) in self.detectors.iter().enumerate() {
            d.validate()?;
            if self.detectors[..i].iter().any(|o| o.label == d.label) {
                return bad(format!("duplicate detector label {}", d.label));
            }
        }
        let h = self.field.half_length();
        let mut regions: Vec<(String, Region)> =
            self.detectors.iter().map(|d| (format!("detector {}", d.label), d.support())).collect();
        if let Some(r) = self.kick_region() {
            regions.push(("kick".into(), r));
        }
        for (name, r) in &regions {
            if r.t_min < t0 || r.t_max > t1 {
                return bad(format!("{name} support [{}, {}] leaves the window [{t0}, {t1}]", r.t_min, r.t_max));
            }
            if r.x_min < -h || r.x_max > h {
                return Err(cdl_field::FieldError::SupportOutsideDomain {
                    lo: r.x_min,
                    hi: r.x_max,
                    half_length: h,
                }
                .into());
            }
        }
        let extent = self.spatial_extent();
        let limit = (self.field.length - extent) / 2.0;
        if t1 - t0 >= limit {
            return bad(format!(
                "duration {} must stay below (L − extent)/2 = {limit} to avoid wrap-around",
                t1 - t0
            ));
        }
        if self.resolution.steps < 4 || self.resolution.quad_order < 2 {
            return bad("resolution too coarse".into());
        }
        Ok(())
    }
}
