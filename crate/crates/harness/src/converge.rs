use std::str::FromStr;
use std::time::Instant;

use cdl_exactsim::{excitation_probability, reduced_detector_state, sorkin_slope, ExactState, Propagator};
use cdl_field::{smeared_commutator, GaussianFieldState};
use cdl_perturbation::{response_probability, Scenario};
use num_complex::Complex64 as C;

use crate::{Cell, HarnessError, LoadedScenario, ResultRecord, ScenarioFile, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    /// Field mode cutoff.
    N,
    /// Oracle Fock truncation.
    FockCutoff,
    /// Oracle time step.
    Dt,
    /// Gauss-Legendre order of the perturbative quadratures.
    QuadOrder,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::N => "N",
            ScanParameter::FockCutoff => "fock_cutoff",
            ScanParameter::Dt => "dt",
            ScanParameter::QuadOrder => "quad_order",
        }
    }

    /// Length scale that goes to zero under refinement.
    pub fn scale(self, v: f64) -> f64 {
        match self {
            ScanParameter::Dt => v,
            _ => 1.0 / v,
        }
    }

    fn apply(self, file: &mut ScenarioFile, v: f64) -> Result<(), HarnessError> {
        let count = || -> Result<usize, HarnessError> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(HarnessError::Validation(format!("{} takes positive integers, got {v}", self.name())))
            }
        };
        match self {
            ScanParameter::N => file.field.cutoff = count()?,
            ScanParameter::FockCutoff => file.oracle.fock_cutoff = count()?,
            ScanParameter::QuadOrder => file.resolution.quad_order = count()?,
            ScanParameter::Dt => {
                if !(v > 0.0) {
                    return Err(HarnessError::Validation(format!("dt must be positive, got {v}")));
                }
                file.oracle.dt = Some(v);
            }
        }
        Ok(())
    }

    pub fn default_observable(self, file: &ScenarioFile) -> Observable {
        match self {
            ScanParameter::N => Observable::Commutator,
            ScanParameter::Dt => Observable::State,
            ScanParameter::QuadOrder => Observable::Response,
            ScanParameter::FockCutoff if file.kick.enabled => Observable::SorkinSlope,
            ScanParameter::FockCutoff => Observable::ExactResponse,
        }
    }
}

impl FromStr for ScanParameter {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        [ScanParameter::N, ScanParameter::FockCutoff, ScanParameter::Dt, ScanParameter::QuadOrder]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::Schema { path: "scan.parameter".into(), message: format!("unknown parameter {s:?}") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Smeared commutator between the sender's and receiver's spacetime profiles.
    Commutator,
    /// Perturbative response of the first detector alone.
    Response,
    /// Exact excitation probability of the first detector alone.
    ExactResponse,
    /// Exact `∂p_B/∂λ_f`.
    SorkinSlope,
    /// Final joint state vector; the tabulated value is the receiver's
    /// excitation, the differences are vector norms.
    State,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Commutator => "commutator",
            Observable::Response => "response",
            Observable::ExactResponse => "exact_response",
            Observable::SorkinSlope => "sorkin_slope",
            Observable::State => "state",
        }
    }
}

impl FromStr for Observable {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        [Observable::Commutator, Observable::Response, Observable::ExactResponse, Observable::SorkinSlope, Observable::State]
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| HarnessError::Schema { path: "scan.observable".into(), message: format!("unknown observable {s:?}") })
    }
}

struct Sample {
    value: f64,
    error: f64,
    vector: Option<Vec<C>>,
}

fn first_alone(scen: &Scenario) -> Result<Scenario, HarnessError> {
    let d = scen.detectors.first().ok_or_else(|| HarnessError::Validation("scenario has no detectors".into()))?;
    Ok(Scenario { detectors: vec![d.clone()], ..scen.clone() })
}

fn evaluate(obs: Observable, loaded: &LoadedScenario) -> Result<Sample, HarnessError> {
    let (file, scen) = (&loaded.file, &loaded.scenario);
    let plain = |value: f64| Sample { value, error: 0.0, vector: None };
    Ok(match obs {
        Observable::Commutator => {
            let get = |l| scen.detector(l).ok_or_else(|| HarnessError::Validation(format!("scenario has no detector {l}")));
            let (a, b) = (get(file.sender()?)?, get(file.receiver()?)?);
            plain(smeared_commutator(&a.smearing.into(), &b.smearing.into(), &scen.field, scen.resolution.quad_order)?)
        }
        Observable::Response => {
            let s = first_alone(scen)?;
            plain(response_probability(&s.detectors[0], &GaussianFieldState::Vacuum, &s)?)
        }
        Observable::ExactResponse => {
            let s = first_alone(scen)?;
            let info = file.oracle_space(&s)?;
            let e = excitation_probability(s.detectors[0].label, &s, &info, &file.oracle_options())?;
            Sample { value: e.value, error: e.error, vector: None }
        }
        Observable::SorkinSlope => {
            let info = file.oracle_space(scen)?;
            let e = sorkin_slope(scen, &info, &file.oracle_options(), file.probe.kick_step)?;
            Sample { value: e.value, error: e.error, vector: None }
        }
        Observable::State => {
            let info = file.oracle_space(scen)?;
            let prop = Propagator::new(scen, &info)?;
            let steps = prop.steps_for(file.oracle_options().step_for(scen));
            let all: Vec<_> = scen.detectors.iter().map(|d| d.label).collect();
            let state = prop.evolve_state(&ExactState::initial(scen, &info)?, &all, steps);
            let p = reduced_detector_state(file.receiver()?, &state, &info)?.0[1][1].re;
            let vector = state.members.iter().flat_map(|m| m.psi.iter().map(move |z| z * m.weight.sqrt())).collect();
            Sample { value: p, error: 0.0, vector: Some(vector) }
        }
    })
}

/// Least-squares slope of `ln Δ` against `ln h` over the positive
/// differences; `None` with fewer than two of them.
pub fn fitted_order(scales: &[f64], deltas: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        scales.iter().zip(deltas).filter(|(h, d)| **h > 0.0 && **d > 0.0).map(|(h, d)| (h.ln(), d.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Re-runs the observable with `parameter` set to each value. The fitted
/// order is the slope of `ln|v_i − v_{i−1}|` against `ln h_{i−1}`, with `h`
/// the refinement scale of the parameter.
pub fn convergence_scan(
    parameter: ScanParameter,
    values: &[f64],
    observable: Option<Observable>,
    loaded: &LoadedScenario,
) -> Result<ResultRecord, HarnessError> {
    let start = Instant::now();
    let mut rec = ResultRecord::new("converge", &loaded.input_hash);
    fill(parameter, values, observable, loaded, &mut rec)?;
    rec.wall_clock = start.elapsed().as_secs_f64();
    Ok(rec)
}

pub(crate) fn scan_from_file(loaded: &LoadedScenario, rec: &mut ResultRecord) -> Result<(), HarnessError> {
    let scan = &loaded.file.scan;
    let parameter: ScanParameter = scan
        .parameter
        .as_deref()
        .ok_or_else(|| HarnessError::Schema { path: "scan.parameter".into(), message: "converge needs a scan parameter".into() })?
        .parse()?;
    let observable = scan.observable.as_deref().map(str::parse).transpose()?;
    fill(parameter, &scan.values, observable, loaded, rec)
}

fn fill(
    parameter: ScanParameter,
    values: &[f64],
    observable: Option<Observable>,
    loaded: &LoadedScenario,
    rec: &mut ResultRecord,
) -> Result<(), HarnessError> {
    if values.len() < 2 {
        return Err(HarnessError::Validation("a scan needs at least two values".into()));
    }
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(HarnessError::Validation("scan values must be strictly monotone".into()));
    }
    let obs = observable.unwrap_or_else(|| parameter.default_observable(&loaded.file));
    if obs == Observable::State && parameter != ScanParameter::Dt {
        return Err(HarnessError::Validation("the state observable only scans dt".into()));
    }
    let mut samples = Vec::with_capacity(values.len());
    for &v in values {
        let mut file = loaded.file.clone();
        parameter.apply(&mut file, v)?;
        samples.push(evaluate(obs, &LoadedScenario::from_file(file)?)?);
    }
    let mut deltas = vec![f64::NAN];
    for w in samples.windows(2) {
        deltas.push(match (&w[0].vector, &w[1].vector) {
            (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt(),
            _ => (w[1].value - w[0].value).abs(),
        });
    }
    let scales: Vec<f64> = values.iter().map(|&v| parameter.scale(v)).collect();
    let order = fitted_order(&scales[..scales.len() - 1], &deltas[1..]);
    let mut t = Table::new("scan", &[parameter.name(), obs.name(), "error", "delta"]);
    t.log_scale = true;
    for ((v, s), d) in values.iter().zip(&samples).zip(&deltas) {
        t.push(vec![Cell::from(*v), s.value.into(), s.error.into(), (*d).into()]);
    }
    rec.tables.push(t);
    let last = samples.last().expect("two or more samples");
    rec.set("points", values.len() as f64);
    rec.set("fitted_order", order.unwrap_or(f64::NAN));
    rec.set("final_value", last.value);
    rec.set("final_delta", *deltas.last().expect("two or more deltas"));
    rec.notes.push(format!("{} against {}", obs.name(), parameter.name()));
    rec.budget.step = Some(samples.iter().map(|s| s.error).fold(0.0, f64::max));
    Ok(())
}
