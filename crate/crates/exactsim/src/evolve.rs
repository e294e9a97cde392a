use cdl_detector::Label;
use cdl_perturbation::Scenario;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::hamiltonian::Model;
use crate::{ExactError, ExactState, SpaceInfo};

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Time step; `None` means 1% of the shortest switching half-width.
    pub dt: Option<f64>,
    /// Largest change allowed when the step is halved.
    pub step_tolerance: f64,
    /// Largest population allowed on the truncation boundary.
    pub leak_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { dt: None, step_tolerance: 1e-6, leak_tolerance: 1e-4 }
    }
}

impl OracleOptions {
    pub fn step_for(&self, scen: &Scenario) -> f64 {
        self.dt.unwrap_or_else(|| {
            0.01 * scen.detectors.iter().map(|d| d.smearing.t_width).fold(f64::INFINITY, f64::min).min(1.0)
        })
    }
}

/// Midpoint-rule evolution `Π exp(−i H(t_mid) δt)` over the scenario window,
/// each step exponential applied to vectors by its Taylor series.
pub struct Propagator<'a> {
    pub(crate) model: Model<'a>,
    window: (f64, f64),
}

impl<'a> Propagator<'a> {
    pub fn new(scen: &Scenario, info: &'a SpaceInfo) -> Result<Self, ExactError> {
        scen.validate()?;
        Ok(Self { model: Model::new(scen, info)?, window: scen.window })
    }

    pub fn info(&self) -> &SpaceInfo {
        self.model.info
    }

    /// Number of steps covering the window with steps no longer than `dt`.
    pub fn steps_for(&self, dt: f64) -> usize {
        ((self.window.1 - self.window.0) / dt).ceil().max(1.0) as usize
    }

    /// Evolves `psi` through the window with only `subset` coupled.
    pub fn evolve(&self, psi: &mut [C], subset: &[Label], steps: usize) {
        let mask = self.model.mask(subset);
        let (t0, t1) = self.window;
        let dt = (t1 - t0) / steps as f64;
        let mut buf = Buffers::new(psi.len(), self.info().fock_dim());
        for i in 0..steps {
            let t = t0 + (i as f64 + 0.5) * dt;
            if self.model.active_at(t, &mask) {
                self.step(t, dt, &mask, psi, &mut buf);
            }
        }
    }

    /// Backward evolution, `ψ → S† ψ`.
    pub fn evolve_adjoint(&self, psi: &mut [C], subset: &[Label], steps: usize) {
        let mask = self.model.mask(subset);
        let (t0, t1) = self.window;
        let dt = (t1 - t0) / steps as f64;
        let mut buf = Buffers::new(psi.len(), self.info().fock_dim());
        for i in (0..steps).rev() {
            let t = t0 + (i as f64 + 0.5) * dt;
            if self.model.active_at(t, &mask) {
                self.step(t, -dt, &mask, psi, &mut buf);
            }
        }
    }

    pub fn evolve_state(&self, state: &ExactState, subset: &[Label], steps: usize) -> ExactState {
        let mut out = state.clone();
        for m in &mut out.members {
            self.evolve(&mut m.psi, subset, steps);
        }
        out
    }

    /// `ψ ← exp(−i H(t) dt) ψ`.
    fn step(&self, t: f64, dt: f64, mask: &[bool], psi: &mut [C], buf: &mut Buffers) {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        buf.term.copy_from_slice(psi);
        for k in 1..=60 {
            self.model.apply(t, mask, &buf.term, &mut buf.next, &mut buf.scratch);
            let f = C::new(0.0, -dt / k as f64);
            let mut size = 0.0;
            for ((p, term), next) in psi.iter_mut().zip(buf.term.iter_mut()).zip(&buf.next) {
                *term = next * f;
                *p += *term;
                size += term.norm_sqr();
            }
            if size.sqrt() <= 1e-17 * norm {
                return;
            }
        }
        panic!("step exponential did not converge: |H dt| too large");
    }
}

struct Buffers {
    term: Vec<C>,
    next: Vec<C>,
    scratch: Vec<C>,
}

impl Buffers {
    fn new(dim: usize, fock: usize) -> Self {
        Self { term: vec![ZERO; dim], next: vec![ZERO; dim], scratch: vec![ZERO; fock] }
    }
}

/// Largest singular value; dense SVD up to 1024, power iteration beyond.
pub(crate) fn spectral_norm(m: &DMatrix<C>) -> f64 {
    if m.nrows() <= 1024 {
        return m.singular_values().max();
    }
    let mut v = nalgebra::DVector::from_fn(m.ncols(), |i, _| C::new(1.0 + (i % 7) as f64, (i % 3) as f64));
    let mut est = 0.0;
    for _ in 0..200 {
        let w = m.adjoint() * (m * &v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = w / C::from(n);
        let prev = est;
        est = n.sqrt();
        if (est - prev).abs() <= 1e-12 * est {
            break;
        }
    }
    est
}

/// Dense scattering operator of `subset` over the window. The step is
/// halved once; the refined operator is returned.
pub fn scattering(subset: &[Label], scen: &Scenario, info: &SpaceInfo, opts: &OracleOptions) -> Result<DMatrix<C>, ExactError> {
    let dim = info.dim();
    info.require_dense(dim)?;
    let prop = Propagator::new(scen, info)?;
    let steps = prop.steps_for(opts.step_for(scen));
    let coarse = dense_scattering(&prop, subset, steps);
    let fine = dense_scattering(&prop, subset, 2 * steps);
    let change = spectral_norm(&(&fine - &coarse));
    if change > opts.step_tolerance {
        return Err(ExactError::StepTooCoarse { what: "scattering operator".into(), change, tolerance: opts.step_tolerance });
    }
    Ok(fine)
}

pub(crate) fn dense_scattering(prop: &Propagator, subset: &[Label], steps: usize) -> DMatrix<C> {
    let dim = prop.info().dim();
    let mut s = DMatrix::zeros(dim, dim);
    let mut psi = vec![ZERO; dim];
    for k in 0..dim {
        psi.fill(ZERO);
        psi[k] = C::new(1.0, 0.0);
        prop.evolve(&mut psi, subset, steps);
        s.column_mut(k).iter_mut().zip(&psi).for_each(|(s, p)| *s = *p);
    }
    s
}
