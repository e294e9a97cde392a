use cdl_detector::{detector_form_factor, DetectorSpec, Label};
use cdl_field::Kick;
use cdl_perturbation::Scenario;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::{ExactError, SpaceInfo};

const ZERO: C = C::new(0.0, 0.0);

pub(crate) struct Term {
    pub spec: DetectorSpec,
    /// Coupling coefficients on the retained modes.
    g: Vec<C>,
    /// `β_n g_n` for a unit kick on the classical mode set.
    drive: Vec<C>,
}

/// Interaction Hamiltonian `Σ_d λ_d χ_d(t) J_d(t) ⊗ (Φ_d(t) + λ_f Φ_cl,d(t))`
/// on a truncated space, in the displaced frame of the scenario's kick.
pub(crate) struct Model<'a> {
    pub info: &'a SpaceInfo,
    pub terms: Vec<Term>,
    omega: Vec<f64>,
    omega_cl: Vec<f64>,
    lambda_f: f64,
}

impl<'a> Model<'a> {
    pub fn new(scen: &Scenario, info: &'a SpaceInfo) -> Result<Self, ExactError> {
        info.check(scen)?;
        let order = scen.resolution.quad_order;
        let cl_spec = scen.classical_field_spec();
        let beta = match &scen.kick {
            Some(k) => Kick { profile: k.profile.clone(), lambda: 1.0 }.amplitudes(&cl_spec, order)?,
            None => vec![ZERO; cl_spec.mode_count()],
        };
        let n0 = scen.field.cutoff as i64;
        let terms = scen
            .detectors
            .iter()
            .map(|d| {
                let g_all = detector_form_factor(d, &scen.field, order, 2)?.coupling;
                let g = info.modes.iter().map(|&n| g_all[(n + n0) as usize]).collect();
                let g_cl = detector_form_factor(d, &cl_spec, order, 2)?.coupling;
                let drive = beta.iter().zip(&g_cl).map(|(b, g)| b * g).collect();
                Ok(Term { spec: d.clone(), g, drive })
            })
            .collect::<Result<Vec<_>, ExactError>>()?;
        Ok(Self {
            info,
            terms,
            omega: info.modes.iter().map(|&n| scen.field.mode(n).omega).collect(),
            omega_cl: cl_spec.modes().iter().map(|m| m.omega).collect(),
            lambda_f: scen.kick.as_ref().map_or(0.0, |k| k.lambda),
        })
    }

    pub fn mask(&self, subset: &[Label]) -> Vec<bool> {
        self.terms.iter().map(|t| subset.contains(&t.spec.label)).collect()
    }

    /// Whether any active detector is switched on at `t`.
    pub fn active_at(&self, t: f64, mask: &[bool]) -> bool {
        self.terms.iter().zip(mask).any(|(term, &on)| on && term.spec.coupling != 0.0 && term.spec.smearing.chi(t) != 0.0)
    }

    fn drive_at(&self, term: &Term, t: f64) -> f64 {
        if self.lambda_f == 0.0 {
            return 0.0;
        }
        let s: C = term.drive.iter().zip(&self.omega_cl).map(|(a, w)| a * C::from_polar(1.0, -w * t)).sum();
        2.0 * self.lambda_f * s.re
    }

    /// `out = H(t) ψ`.
    pub fn apply(&self, t: f64, mask: &[bool], psi: &[C], out: &mut [C], scratch: &mut [C]) {
        out.fill(ZERO);
        let f = self.info.fock_dim();
        let nq = 1usize << self.info.qubits();
        for (d, (term, &on)) in self.terms.iter().zip(mask).enumerate() {
            let chi = term.spec.smearing.chi(t);
            if !on || chi == 0.0 || term.spec.coupling == 0.0 {
                continue;
            }
            let pref = term.spec.coupling * chi;
            let j = term.spec.current_at(t).0;
            let c: Vec<C> = term.g.iter().zip(&self.omega).map(|(g, w)| g * C::from_polar(1.0, -w * t)).collect();
            let cl = self.drive_at(term, t);
            let shift = self.info.shift(d);
            for s_in in 0..nq {
                let block = &psi[s_in * f..(s_in + 1) * f];
                let w = &mut scratch[..f];
                field_apply(&c, cl, &self.info.basis.lowering, block, w);
                let bit = (s_in >> shift) & 1;
                for b in 0..2 {
                    let amp = j[b][bit] * pref;
                    if amp == ZERO {
                        continue;
                    }
                    let s_out = (s_in & !(1 << shift)) | (b << shift);
                    out[s_out * f..(s_out + 1) * f].iter_mut().zip(w.iter()).for_each(|(o, x)| *o += amp * x);
                }
            }
        }
    }
}

/// `w = (Σ_m c_m a_m + h.c. + cl) ψ` on the Fock space.
fn field_apply(c: &[C], cl: f64, lowering: &[(u32, u32, u32, f64)], psi: &[C], w: &mut [C]) {
    w.iter_mut().zip(psi).for_each(|(w, p)| *w = p * cl);
    for &(m, from, to, amp) in lowering {
        let cm = c[m as usize] * amp;
        w[to as usize] += cm * psi[from as usize];
        w[from as usize] += cm.conj() * psi[to as usize];
    }
}

/// Dense `H(t)` with every detector of the scenario active.
pub fn hamiltonian_at(t: f64, scen: &Scenario, info: &SpaceInfo) -> Result<DMatrix<C>, ExactError> {
    let dim = info.dim();
    info.require_dense(dim)?;
    let model = Model::new(scen, info)?;
    let mask = vec![true; model.terms.len()];
    let mut h = DMatrix::zeros(dim, dim);
    let mut e = vec![ZERO; dim];
    let mut col = vec![ZERO; dim];
    let mut scratch = vec![ZERO; info.fock_dim()];
    for k in 0..dim {
        e[k] = C::new(1.0, 0.0);
        model.apply(t, &mask, &e, &mut col, &mut scratch);
        h.column_mut(k).iter_mut().zip(&col).for_each(|(h, c)| *h = *c);
        e[k] = ZERO;
    }
    Ok(h)
}

/// Truncated smeared field `Σ_m (c_m a_m + c_m* a_m†)` on the Fock space.
pub(crate) fn fock_field_matrix(c: &[C], info: &SpaceInfo) -> DMatrix<C> {
    let f = info.fock_dim();
    let mut m = DMatrix::zeros(f, f);
    for &(mode, from, to, amp) in &info.basis.lowering {
        let v = c[mode as usize] * amp;
        m[(to as usize, from as usize)] += v;
        m[(from as usize, to as usize)] += v.conj();
    }
    m
}
