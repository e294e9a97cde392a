use std::collections::HashMap;

use cdl_detector::{detector_form_factor, Label};
use cdl_perturbation::Scenario;

use crate::ExactError;

/// Largest dimension accepted by the dense-matrix operations.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Occupations `0..cutoff` in every retained mode.
    PerMode { cutoff: usize },
    /// Total occupation over all retained modes at most `cap`.
    ExcitationCap { cap: usize },
}

/// Occupation-number basis with annihilation tables.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(mode, from, to, √n)` for `a_mode |from⟩ = √n |to⟩`.
    pub(crate) lowering: Vec<(u32, u32, u32, f64)>,
    top: Vec<bool>,
}

impl FockBasis {
    pub fn new(modes: usize, truncation: Truncation) -> Self {
        let mut states = Vec::new();
        match truncation {
            Truncation::PerMode { cutoff } => {
                let mut occ = vec![0u8; modes];
                loop {
                    states.push(occ.clone());
                    // odometer with the last mode fastest
                    let mut i = modes;
                    loop {
                        if i == 0 {
                            return Self::finish(states, truncation);
                        }
                        i -= 1;
                        occ[i] += 1;
                        if (occ[i] as usize) < cutoff {
                            break;
                        }
                        occ[i] = 0;
                    }
                }
            }
            Truncation::ExcitationCap { cap } => {
                for total in 0..=cap {
                    push_compositions(&mut states, &mut vec![0u8; modes], 0, total);
                }
            }
        }
        Self::finish(states, truncation)
    }

    fn finish(states: Vec<Vec<u8>>, truncation: Truncation) -> Self {
        let index: HashMap<Vec<u8>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut lowering = Vec::new();
        for (from, s) in states.iter().enumerate() {
            for (m, &n) in s.iter().enumerate() {
                if n > 0 {
                    let mut t = s.clone();
                    t[m] -= 1;
                    lowering.push((m as u32, from as u32, index[&t] as u32, (n as f64).sqrt()));
                }
            }
        }
        let top = states
            .iter()
            .map(|s| match truncation {
                Truncation::PerMode { cutoff } => s.iter().any(|&n| n as usize + 1 == cutoff),
                Truncation::ExcitationCap { cap } => s.iter().map(|&n| n as usize).sum::<usize>() == cap,
            })
            .collect();
        Self { states, index, lowering, top }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, occupations: &[u8]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Whether a basis state lies on the truncation boundary.
    pub fn is_top(&self, i: usize) -> bool {
        self.top[i]
    }
}

/// All occupation vectors with the given total, in lexicographic order.
fn push_compositions(out: &mut Vec<Vec<u8>>, occ: &mut Vec<u8>, from: usize, left: usize) {
    if left == 0 {
        out.push(occ.clone());
        return;
    }
    for m in from..occ.len() {
        occ[m] += 1;
        push_compositions(out, occ, m, left - 1);
        occ[m] -= 1;
    }
}

/// Truncated Hilbert space of a scenario.
#[derive(Debug, Clone)]
pub struct SpaceInfo {
    /// Qubit order (the scenario's detector order).
    pub labels: Vec<Label>,
    /// Retained mode numbers `n`, ascending.
    pub modes: Vec<i64>,
    pub truncation: Truncation,
    pub basis: FockBasis,
    /// Human-readable mode-selection rule, for output metadata.
    pub selection: String,
}

impl SpaceInfo {
    pub fn new(labels: Vec<Label>, mut modes: Vec<i64>, truncation: Truncation, selection: String) -> Result<Self, ExactError> {
        if labels.len() > 3 {
            return Err(ExactError::Invalid("at most three qubits".into()));
        }
        modes.sort_unstable();
        modes.dedup();
        let (Truncation::PerMode { cutoff } | Truncation::ExcitationCap { cap: cutoff }) = truncation;
        if cutoff == 0 {
            return Err(ExactError::Invalid("Fock cutoff must be positive".into()));
        }
        let basis = FockBasis::new(modes.len(), truncation);
        Ok(Self { labels, modes, truncation, basis, selection })
    }

    /// The `count` modes with the largest coupling `max_d |g_{d,n}|`, each
    /// with levels `0..cutoff`.
    pub fn strongest_modes(scen: &Scenario, count: usize, cutoff: usize) -> Result<Self, ExactError> {
        let mut weight = vec![0.0f64; scen.field.mode_count()];
        for d in &scen.detectors {
            let g = detector_form_factor(d, &scen.field, scen.resolution.quad_order, 2)?.coupling;
            weight.iter_mut().zip(&g).for_each(|(w, g)| *w = w.max(g.norm()));
        }
        let mut order: Vec<usize> = (0..weight.len()).collect();
        order.sort_by(|&a, &b| {
            let (na, nb) = (scen.field.n_at(a), scen.field.n_at(b));
            weight[b].total_cmp(&weight[a]).then(na.abs().cmp(&nb.abs())).then(na.cmp(&nb))
        });
        let modes = order.iter().take(count).map(|&i| scen.field.n_at(i)).collect();
        let selection = format!("{count} modes with largest max_d |g_d,n|, per-mode cutoff {cutoff}");
        Self::new(Self::labels_of(scen), modes, Truncation::PerMode { cutoff }, selection)
    }

    /// Every mode of the field spec with total occupation at most `cap`.
    pub fn excitation_cap(scen: &Scenario, cap: usize) -> Result<Self, ExactError> {
        let n = scen.field.cutoff as i64;
        let selection = format!("all modes |n| <= {n}, total occupation <= {cap}");
        Self::new(Self::labels_of(scen), (-n..=n).collect(), Truncation::ExcitationCap { cap }, selection)
    }

    fn labels_of(scen: &Scenario) -> Vec<Label> {
        scen.detectors.iter().map(|d| d.label).collect()
    }

    pub fn qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn fock_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        (1 << self.qubits()) * self.fock_dim()
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Bit shift of a qubit inside the qubit string.
    pub(crate) fn shift(&self, qubit: usize) -> usize {
        self.qubits() - 1 - qubit
    }

    pub(crate) fn require_dense(&self, dim: usize) -> Result<(), ExactError> {
        if dim > DENSE_CAP {
            return Err(ExactError::DimensionTooLarge { dim, cap: DENSE_CAP });
        }
        Ok(())
    }

    /// Must list the scenario's detectors in order.
    pub(crate) fn check(&self, scen: &Scenario) -> Result<(), ExactError> {
        if self.labels != Self::labels_of(scen) {
            return Err(ExactError::Invalid(format!(
                "space qubits {:?} do not match scenario detectors {:?}",
                self.labels,
                Self::labels_of(scen)
            )));
        }
        let n = scen.field.cutoff as i64;
        if self.modes.iter().any(|m| m.abs() > n) {
            return Err(ExactError::Invalid("retained mode outside the field cutoff".into()));
        }
        Ok(())
    }
}
