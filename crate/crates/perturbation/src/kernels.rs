//! Order-(1,1) kernels evaluated directly as nested cumulative trapezoid
//! sums over one uniform grid, independent of the series engine, with the
//! same Richardson scheme and step-halving check.

use cdl_detector::{detector_form_factor, DetectorSpec, Op2};
use nalgebra::Matrix4;
use num_complex::Complex64 as C;

use crate::{PerturbationError, Scenario};

const I: C = C::new(0.0, 1.0);

/// Wrong-wedge commutator kernel
/// `K = −i ∫∫_{t>s} χ_A(t) χ_B(s) PJ(A t, B s) J_A(t) ⊗ J_B(s) dt ds`,
/// which equals the `λ_A λ_B` coefficient of `S_{A+B} − S_B S_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationDefect {
    /// Largest singular value of `kernel`.
    pub norm: f64,
    /// Matrix on `A ⊗ B`, basis index `2a + b`.
    pub kernel: Matrix4<C>,
    pub error: f64,
}

/// `λ_A λ_B` coefficient of the change of `ρ_B`,
/// `i ∫∫_{s<t} m_A(s) χ_A(s) χ_B(t) PJ(A s, B t) [J_B(t), ρ_B] ds dt`,
/// with `m_A(s) = tr(ρ_A J_A(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signaling {
    /// Half the trace norm of `matrix` (trace-distance scale).
    pub value: f64,
    pub matrix: Op2,
    pub error: f64,
}

struct Pair {
    /// `g_A,n conj(g_B,n)`.
    cross: Vec<C>,
    omega: Vec<f64>,
    grid: (f64, f64),
    /// A-priori bound `∫χ_A ∫χ_B · 2Σ|cross|` on the kernel size.
    scale: f64,
}

fn pair(a: &DetectorSpec, b: &DetectorSpec, scen: &Scenario) -> Result<Pair, PerturbationError> {
    scen.validate()?;
    let order = scen.resolution.quad_order;
    let ga = detector_form_factor(a, &scen.field, order, 2)?.coupling;
    let gb = detector_form_factor(b, &scen.field, order, 2)?.coupling;
    let cross: Vec<C> = ga.iter().zip(&gb).map(|(x, y)| x * y.conj()).collect();
    let (ra, rb) = (a.support(), b.support());
    let area = |d: &DetectorSpec| d.smearing.t_width * cdl_field::BUMP_AREA;
    let scale = area(a) * area(b) * 2.0 * cross.iter().map(|c| c.norm()).sum::<f64>();
    Ok(Pair {
        cross,
        omega: scen.field.modes().iter().map(|m| m.omega).collect(),
        grid: (ra.t_min.min(rb.t_min), ra.t_max.max(rb.t_max)),
        scale,
    })
}

fn check(what: &str, error: f64, value: f64, scale: f64, tol: f64) -> Result<(), PerturbationError> {
    let change = error / value.abs().max(scale);
    if change > tol {
        return Err(PerturbationError::QuadratureNotConverged { what: what.into(), change, tolerance: tol });
    }
    Ok(())
}

fn op_kron(a: &Op2, b: &Op2) -> Matrix4<C> {
    Matrix4::from_fn(|r, c| a.0[r / 2][c / 2] * b.0[r % 2][c % 2])
}

pub fn factorization_defect_leading(
    a: &DetectorSpec,
    b: &DetectorSpec,
    scen: &Scenario,
) -> Result<FactorizationDefect, PerturbationError> {
    let p = pair(a, b, scen)?;
    let steps = scen.resolution.steps;
    let g: Vec<Matrix4<C>> = [1, 2, 4].iter().map(|f| defect_on_grid(a, b, &p, f * steps)).collect();
    let extrapolate = |c: &Matrix4<C>, f: &Matrix4<C>| (f * C::from(4.0) - c) / C::from(3.0);
    let kernel = extrapolate(&g[1], &g[2]);
    let error = (kernel - extrapolate(&g[0], &g[1])).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let norm = kernel.singular_values().max();
    check("factorization_defect_leading", error, norm, p.scale, scen.resolution.tolerance)?;
    Ok(FactorizationDefect { norm, kernel, error })
}

fn defect_on_grid(a: &DetectorSpec, b: &DetectorSpec, p: &Pair, steps: usize) -> Matrix4<C> {
    let m = p.omega.len();
    let (t0, t1) = p.grid;
    let dt = (t1 - t0) / steps as f64;
    // ∫_{s<t} χ_B(s) e^{±iωs} J_B(s) ds per mode
    let mut cum_p = vec![Op2::zero(); m];
    let mut cum_m = vec![Op2::zero(); m];
    let b_term = |s: f64, n: usize, sign: f64| {
        let chi = b.smearing.chi(s);
        b.current_at(s).scale(C::from_polar(chi, sign * p.omega[n] * s))
    };
    let mut total = Matrix4::zeros();
    let mut prev: Option<Matrix4<C>> = None;
    for i in 0..=steps {
        let t = t0 + i as f64 * dt;
        if i > 0 {
            let s0 = t - dt;
            for n in 0..m {
                let h = C::from(0.5 * dt);
                cum_p[n] = cum_p[n] + (b_term(s0, n, 1.0) + b_term(t, n, 1.0)).scale(h);
                cum_m[n] = cum_m[n] + (b_term(s0, n, -1.0) + b_term(t, n, -1.0)).scale(h);
            }
        }
        let chi_a = a.smearing.chi(t);
        let h = if chi_a == 0.0 {
            Matrix4::zeros()
        } else {
            let mut inner = Op2::zero();
            for n in 0..m {
                let e = C::from_polar(1.0, -p.omega[n] * t);
                let z = p.cross[n] * e;
                inner = inner + (cum_p[n].scale(z) - cum_m[n].scale(z.conj())).scale(-I);
            }
            op_kron(&a.current_at(t).scale(C::from(chi_a)), &inner)
        };
        if let Some(prev) = prev {
            total += (prev + h) * C::from(0.5 * dt);
        }
        prev = Some(h);
    }
    total * (-I)
}

pub fn signaling_coefficient(a: &DetectorSpec, b: &DetectorSpec, scen: &Scenario) -> Result<Signaling, PerturbationError> {
    let p = pair(a, b, scen)?;
    let steps = scen.resolution.steps;
    let g: Vec<Op2> = [1, 2, 4].iter().map(|f| signaling_on_grid(a, b, &p, f * steps)).collect();
    let extrapolate = |c: &Op2, f: &Op2| f.scale(C::from(4.0 / 3.0)) - c.scale(C::from(1.0 / 3.0));
    let matrix = extrapolate(&g[1], &g[2]);
    let error = matrix.max_abs_diff(&extrapolate(&g[0], &g[1]));
    let [l0, l1] = matrix.hermitian_eigenvalues();
    let value = 0.5 * (l0.abs() + l1.abs());
    check("signaling_coefficient", error, value, p.scale, scen.resolution.tolerance)?;
    Ok(Signaling { value, matrix, error })
}

fn signaling_on_grid(a: &DetectorSpec, b: &DetectorSpec, p: &Pair, steps: usize) -> Op2 {
    let m = p.omega.len();
    let (t0, t1) = p.grid;
    let dt = (t1 - t0) / steps as f64;
    let a_term = |s: f64| a.smearing.chi(s) * a.current_expectation(s).re;
    let mut cum = vec![C::new(0.0, 0.0); m];
    let mut total = Op2::zero();
    let mut prev: Option<Op2> = None;
    for i in 0..=steps {
        let t = t0 + i as f64 * dt;
        if i > 0 {
            let (f0, f1) = (a_term(t - dt), a_term(t));
            for n in 0..m {
                let w = p.omega[n];
                cum[n] += (C::from_polar(f0, -w * (t - dt)) + C::from_polar(f1, -w * t)) * (0.5 * dt);
            }
        }
        let chi_b = b.smearing.chi(t);
        let h = if chi_b == 0.0 {
            Op2::zero()
        } else {
            let inner: C = (0..m).map(|n| p.cross[n] * C::from_polar(1.0, p.omega[n] * t) * cum[n]).sum();
            let pj = 2.0 * inner.im;
            let j = b.current_at(t);
            let rho = b.initial_state;
            (j * rho - rho * j).scale(I * (chi_b * pj))
        };
        if let Some(prev) = prev {
            total = total + (prev + h).scale(C::from(0.5 * dt));
        }
        prev = Some(h);
    }
    total
}
