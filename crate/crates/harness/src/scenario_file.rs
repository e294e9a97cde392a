//! Typed form of a scenario file. Every optional entry has a default that
//! is written back into the echoed configuration.

use cdl_detector::{DetectorSpec, Label, Op2, SmearingProfile};
use cdl_exactsim::{OracleOptions, SpaceInfo};
use cdl_field::{FieldSpec, Kick, SpacetimeFunction};
use cdl_geometry::Region;
use cdl_perturbation::{Resolution, Scenario};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub field: FieldSection,
    #[serde(default)]
    pub detectors: Vec<DetectorSection>,
    #[serde(default)]
    pub kick: KickSection,
    /// Filled from the supports when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSection>,
    #[serde(default)]
    pub resolution: ResolutionSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default, skip_serializing_if = "ScanSection::is_empty")]
    pub scan: ScanSection,
    /// Region pairs for the `classify` experiment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(rename = "L")]
    pub length: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub cutoff: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    #[default]
    Ground,
    Excited,
    Plus,
}

impl InitialState {
    fn op(self) -> Op2 {
        match self {
            InitialState::Ground => Op2::ground(),
            InitialState::Excited => Op2::excited(),
            InitialState::Plus => Op2::plus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub label: String,
    #[serde(default = "one")]
    pub gap: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default)]
    pub initial: InitialState,
    pub smearing: SmearingSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearingSection {
    pub t_center: f64,
    pub t_width: f64,
    pub x_center: f64,
    #[serde(default)]
    pub x_width: f64,
    #[serde(default)]
    pub pointlike: bool,
}

impl SmearingSection {
    pub fn profile(&self) -> SmearingProfile {
        let p = SmearingProfile::new(self.t_center, self.t_width, self.x_center, self.x_width);
        if self.pointlike {
            p.to_pointlike()
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "one")]
    pub lambda_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<SmearingSection>,
}

impl Default for KickSection {
    fn default() -> Self {
        Self { enabled: false, lambda_f: 1.0, profile: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_classical_modes")]
    pub classical_modes: usize,
}

impl Default for ResolutionSection {
    fn default() -> Self {
        Self { steps: default_steps(), quad_order: default_quad_order(), classical_modes: default_classical_modes() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    /// Total excitation number at most `fock_cutoff` over all field modes.
    #[default]
    Cap,
    /// The `modes` strongest modes, each with `fock_cutoff` levels.
    PerMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub truncation: TruncationKind,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_fock_cutoff")]
    pub fock_cutoff: usize,
    /// Time step; 1% of the shortest switching half-width when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            enabled: true,
            truncation: TruncationKind::Cap,
            modes: default_modes(),
            fock_cutoff: default_fock_cutoff(),
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_leak")]
    pub leak: f64,
    /// Multiple of the floor allowed for a vanishing claim.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: default_quadrature(),
            step: default_step(),
            leak: default_leak(),
            floor_factor: default_floor_factor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementBasis {
    #[default]
    Z,
    X,
}

/// Knobs of the individual experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_sender")]
    pub sender: String,
    #[serde(default = "default_receiver")]
    pub receiver: String,
    #[serde(default)]
    pub basis: MeasurementBasis,
    /// Finite-difference step in the detector couplings.
    #[serde(default = "default_coupling")]
    pub coupling_step: f64,
    /// Finite-difference step in the kick strength.
    #[serde(default = "default_kick_step")]
    pub kick_step: f64,
    /// Coupling stencil step of the order probe.
    #[serde(default = "default_order_step")]
    pub order_step: f64,
    /// Kick strengths tabulated by the `sorkin` experiment.
    #[serde(default = "default_lambda_fs")]
    pub lambda_f: Vec<f64>,
    /// Lattice spacing of the sampling oracle in `classify`.
    #[serde(default = "default_spacing")]
    pub sample_spacing: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            sender: default_sender(),
            receiver: default_receiver(),
            basis: MeasurementBasis::Z,
            coupling_step: default_coupling(),
            kick_step: default_kick_step(),
            order_step: default_order_step(),
            lambda_f: default_lambda_fs(),
            sample_spacing: default_spacing(),
        }
    }
}

/// Settings of the `converge` experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// One of `N`, `fock_cutoff`, `dt`, `quad_order`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// Defaults to the parameter's usual observable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
}

impl ScanSection {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Two rectangles `[t_min, t_max, x_min, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    pub name: String,
    pub a: [f64; 4],
    pub b: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

impl PairSection {
    pub fn regions(&self) -> Result<(Region, Region), HarnessError> {
        let r = |v: &[f64; 4], side: &str| {
            Region::new(v[0], v[1], v[2], v[3])
                .map_err(|e| HarnessError::Schema { path: format!("pairs.{}.{side}", self.name), message: e.to_string() })
        };
        Ok((r(&self.a, "a")?, r(&self.b, "b")?))
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_coupling() -> f64 {
    0.05
}
fn default_steps() -> usize {
    400
}
fn default_quad_order() -> usize {
    48
}
fn default_classical_modes() -> usize {
    256
}
fn default_modes() -> usize {
    3
}
fn default_fock_cutoff() -> usize {
    2
}
fn default_quadrature() -> f64 {
    1e-4
}
fn default_step() -> f64 {
    1e-6
}
fn default_leak() -> f64 {
    1e-4
}
fn default_floor_factor() -> f64 {
    10.0
}
fn default_sender() -> String {
    "A".into()
}
fn default_receiver() -> String {
    "B".into()
}
fn default_kick_step() -> f64 {
    0.5
}
fn default_order_step() -> f64 {
    0.2
}
fn default_lambda_fs() -> Vec<f64> {
    vec![-1.0, -0.5, 0.0, 0.5, 1.0]
}
fn default_spacing() -> f64 {
    0.25
}

/// Padding added around the supports when the window is derived.
const WINDOW_PADDING: f64 = 0.1;

impl ScenarioFile {
    /// Derives the window from the supports if it was left out.
    pub fn fill_defaults(&mut self) {
        if self.window.is_some() {
            return;
        }
        let mut times: Vec<(f64, f64)> =
            self.detectors.iter().map(|d| (d.smearing.t_center - d.smearing.t_width, d.smearing.t_center + d.smearing.t_width)).collect();
        if let (true, Some(p)) = (self.kick.enabled, self.kick.profile) {
            times.push((p.t_center - p.t_width, p.t_center + p.t_width));
        }
        let (lo, hi) = times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, b)| (lo.min(a), hi.max(b)));
        self.window = Some(if lo.is_finite() {
            WindowSection { t0: lo - WINDOW_PADDING, t1: hi + WINDOW_PADDING }
        } else {
            WindowSection { t0: 0.0, t1: 1.0 }
        });
    }

    pub fn label(&self, value: &str, path: &str) -> Result<Label, HarnessError> {
        value.parse().map_err(|message| HarnessError::Schema { path: path.into(), message })
    }

    pub fn sender(&self) -> Result<Label, HarnessError> {
        self.label(&self.probe.sender, "probe.sender")
    }

    pub fn receiver(&self) -> Result<Label, HarnessError> {
        self.label(&self.probe.receiver, "probe.receiver")
    }

    /// Builds and validates the in-memory scenario.
    pub fn to_scenario(&self) -> Result<Scenario, HarnessError> {
        let f = &self.field;
        let field = FieldSpec::new(f.length, f.m, f.cutoff)?;
        let detectors = self
            .detectors
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let label = self.label(&d.label, &format!("detectors[{i}].label"))?;
                Ok(DetectorSpec::new(label, d.gap, d.coupling, d.smearing.profile()).with_initial_state(d.initial.op())?)
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let w = self.window.ok_or_else(|| HarnessError::Schema { path: "window".into(), message: "missing".into() })?;
        let mut scen = Scenario::new(field, detectors, (w.t0, w.t1));
        if self.kick.enabled {
            let p = self.kick.profile.ok_or_else(|| HarnessError::Schema {
                path: "kick.profile".into(),
                message: "an enabled kick needs a profile".into(),
            })?;
            scen = scen.with_kick(Kick { profile: SpacetimeFunction::Separable(p.profile()), lambda: self.kick.lambda_f });
        }
        scen.resolution = Resolution {
            steps: self.resolution.steps,
            quad_order: self.resolution.quad_order,
            tolerance: self.tolerances.quadrature,
        };
        scen.classical_modes = self.resolution.classical_modes;
        scen.validate()?;
        Ok(scen)
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions { dt: self.oracle.dt, step_tolerance: self.tolerances.step, leak_tolerance: self.tolerances.leak }
    }

    pub fn oracle_space(&self, scen: &Scenario) -> Result<SpaceInfo, HarnessError> {
        let o = &self.oracle;
        Ok(match o.truncation {
            TruncationKind::Cap => SpaceInfo::excitation_cap(scen, o.fock_cutoff)?,
            TruncationKind::PerMode => SpaceInfo::strongest_modes(scen, o.modes, o.fock_cutoff)?,
        })
    }
}
