use std::collections::BTreeMap;
use std::fmt;

use cdl_detector::{Label, Op2};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::PerturbationError;

/// Multi-index of a series entry: order in each detector coupling (in the
/// scenario's detector order) and number of kick insertions (power of λ_f).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeriesKey {
    pub orders: [u8; 3],
    pub kick: u8,
}

impl SeriesKey {
    pub fn new(orders: &[u8], kick: u8) -> Self {
        let mut o = [0u8; 3];
        o[..orders.len()].copy_from_slice(orders);
        Self { orders: o, kick }
    }

    pub fn order(&self) -> usize {
        self.orders.iter().map(|&o| o as usize).sum()
    }

    /// One more slot of detector `d`, optionally a kick insertion.
    pub(crate) fn raised(&self, d: usize, kick: u8) -> Option<Self> {
        let mut k = *self;
        k.orders[d] = k.orders[d].checked_add(1)?;
        k.kick = k.kick.checked_add(kick)?;
        Some(k)
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{};f={})", self.orders[0], self.orders[1], self.orders[2], self.kick)
    }
}

/// Coefficient matrix on the joint detector space. `error` is the largest
/// entrywise change when the time step is halved.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEntry {
    pub matrix: Vec<C>,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbativeSeries {
    pub labels: Vec<Label>,
    pub dim: usize,
    pub entries: BTreeMap<SeriesKey, SeriesEntry>,
    pub max_order: usize,
    pub max_kick_order: usize,
    pub steps: usize,
}

impl PerturbativeSeries {
    pub fn position(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Key from per-label orders; unlisted detectors get order 0.
    pub fn key(&self, orders: &[(Label, u8)], kick: u8) -> Result<SeriesKey, PerturbationError> {
        let mut o = [0u8; 3];
        for &(label, n) in orders {
            let i = self
                .position(label)
                .ok_or_else(|| PerturbationError::InvalidScenario(format!("series has no detector {label}")))?;
            o[i] = n;
        }
        Ok(SeriesKey { orders: o, kick })
    }

    pub fn get(&self, key: &SeriesKey) -> Option<&SeriesEntry> {
        self.entries.get(key)
    }

    /// Partial trace of a joint matrix down to one detector.
    pub fn reduce(&self, matrix: &[C], label: Label) -> Op2 {
        let q = self.labels.len();
        let shift = q - 1 - self.position(label).expect("label in series");
        let mut out = Op2::zero();
        for a in 0..self.dim {
            for b in 0..self.dim {
                if (a ^ b) & !(1 << shift) == 0 {
                    out.0[(a >> shift) & 1][(b >> shift) & 1] += matrix[a * self.dim + b];
                }
            }
        }
        out
    }

    /// `⟨e|tr_rest Z|e⟩` for one detector; zero for absent keys.
    pub fn excitation(&self, key: &SeriesKey, label: Label) -> C {
        self.get(key).map_or(C::new(0.0, 0.0), |e| self.reduce(&e.matrix, label).0[1][1])
    }

    /// Largest entry modulus of a series matrix.
    pub fn magnitude(&self, key: &SeriesKey) -> f64 {
        self.get(key).map_or(0.0, |e| e.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Quadrature error bar on [`Self::excitation`].
    pub fn excitation_error(&self, key: &SeriesKey) -> f64 {
        self.get(key).map_or(0.0, |e| e.error * (self.dim / 2) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `|λ|·‖kernel‖` above the validity heuristic for one detector.
    OutOfValidityRange { label: Label, value: f64, threshold: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::OutOfValidityRange { label, value, threshold } => {
                write!(f, "detector {label}: |λ|·‖kernel‖ = {value:.3} exceeds {threshold}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub joint: Vec<C>,
    pub reduced: Vec<(Label, Op2)>,
    /// Frobenius norm of the anti-Hermitian part removed.
    pub hermiticity_correction: f64,
    /// `|tr ρ − 1|` before renormalisation.
    pub trace_correction: f64,
    pub warnings: Vec<Warning>,
}

impl Assembled {
    pub fn reduced_state(&self, label: Label) -> Option<Op2> {
        self.reduced.iter().find(|(l, _)| *l == label).map(|(_, r)| *r)
    }

    pub fn excitation_probability(&self, label: Label) -> Option<f64> {
        self.reduced_state(label).map(|r| r.0[1][1].re)
    }
}

pub const VALIDITY_THRESHOLD: f64 = 0.3;

/// Evaluates the series at per-detector couplings (scenario order) and kick
/// strength `lambda_f`.
pub fn assemble(series: &PerturbativeSeries, couplings: &[f64], lambda_f: f64) -> Result<Assembled, PerturbationError> {
    if couplings.len() != series.labels.len() {
        return Err(PerturbationError::InvalidScenario(format!(
            "{} couplings given for {} detectors",
            couplings.len(),
            series.labels.len()
        )));
    }
    let n = series.dim;
    let mut rho = vec![C::new(0.0, 0.0); n * n];
    for (key, entry) in &series.entries {
        let w = couplings.iter().zip(&key.orders).map(|(l, &o)| l.powi(o as i32)).product::<f64>()
            * lambda_f.powi(key.kick as i32);
        if w != 0.0 {
            rho.iter_mut().zip(&entry.matrix).for_each(|(r, z)| *r += z * w);
        }
    }
    let mut herm = 0.0;
    let mut joint = rho.clone();
    for a in 0..n {
        for b in 0..n {
            let avg = (rho[a * n + b] + rho[b * n + a].conj()) * 0.5;
            herm += (rho[a * n + b] - avg).norm_sqr();
            joint[a * n + b] = avg;
        }
    }
    let trace: f64 = (0..n).map(|a| joint[a * n + a].re).sum();
    joint.iter_mut().for_each(|z| *z /= trace);

    let mut warnings = Vec::new();
    for (d, (&label, &lambda)) in series.labels.iter().zip(couplings).enumerate() {
        let mut o = [0u8; 3];
        o[d] = 2;
        let Some(e) = series.get(&SeriesKey { orders: o, kick: 0 }) else { continue };
        let m = DMatrix::from_row_slice(n, n, &e.matrix);
        let kernel = m.singular_values().sum().sqrt();
        let value = lambda.abs() * kernel;
        if value > VALIDITY_THRESHOLD {
            warnings.push(Warning::OutOfValidityRange { label, value, threshold: VALIDITY_THRESHOLD });
        }
    }
    let reduced = series.labels.iter().map(|&l| (l, series.reduce(&joint, l))).collect();
    Ok(Assembled {
        joint,
        reduced,
        hermiticity_correction: herm.sqrt(),
        trace_correction: (trace - 1.0).abs(),
        warnings,
    })
}
