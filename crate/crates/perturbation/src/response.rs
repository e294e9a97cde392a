use cdl_detector::{detector_form_factor, DetectorSpec, Op2};
use cdl_field::{FieldError, GaussLegendre, GaussianFieldState};
use num_complex::Complex64 as C;

use crate::engine::{Coupled, Setup};
use crate::{relative_change, PerturbationError, Scenario};

/// Leading-order excitation probability of a ground-state detector
/// (closed form, `λ²` times the response function).
///
/// For a state with occupations `n̄_n` and mean field `Φ_cl`,
///
/// ```text
/// P = λ² Σ_n |g_n|² [(1 + n̄_n)|A(ω_n)|² + n̄_n |A(−ω_n)|²] + λ² |∫ χ a Φ_cl|²
/// A(ν) = ∫ χ(t) a(t) e^{iνt} dt,   a(t) = ⟨e|J(t)|g⟩
/// ```
///
/// `Φ_cl` combines the coherent amplitudes of `state` and the scenario's kick.
pub fn response_probability(
    d: &DetectorSpec,
    state: &GaussianFieldState,
    scen: &Scenario,
) -> Result<f64, PerturbationError> {
    if d.initial_state.max_abs_diff(&Op2::ground()) > 1e-12 {
        return Err(PerturbationError::InvalidScenario(format!(
            "detector {} must start in its ground state",
            d.label
        )));
    }
    let expected = scen.field.mode_count();
    let got = match state {
        GaussianFieldState::Vacuum => expected,
        GaussianFieldState::Coherent(a) => a.len(),
        GaussianFieldState::Thermal(n) => n.len(),
    };
    if got != expected {
        return Err(FieldError::StateShape { expected, got }.into());
    }
    let order = scen.resolution.quad_order;
    let coarse = response_at(d, state, scen, order)?;
    let fine = response_at(d, state, scen, 2 * order)?;
    let change = relative_change(coarse, fine, 1e-300);
    if change > scen.resolution.tolerance {
        return Err(PerturbationError::QuadratureNotConverged {
            what: "response_probability".into(),
            change,
            tolerance: scen.resolution.tolerance,
        });
    }
    Ok(fine)
}

fn response_at(d: &DetectorSpec, state: &GaussianFieldState, scen: &Scenario, order: usize) -> Result<f64, PerturbationError> {
    let g = detector_form_factor(d, &scen.field, order, 2)?.coupling;
    let modes = scen.field.modes();
    let q = GaussLegendre::new(order);
    let s = &d.smearing;
    let kicked = Setup::new(scen, &[d])?;
    let drive: &Coupled = &kicked.detectors[0];
    let lambda_f = scen.kick.as_ref().map_or(0.0, |k| k.lambda);
    let samples: Vec<(f64, C, f64)> = q
        .mapped(s.t_center, s.t_width)
        .map(|(t, w)| {
            let a = d.current_at(t).0[1][0];
            let mut cl = lambda_f * drive.drive_at(&kicked.omega_cl, t);
            if let GaussianFieldState::Coherent(alpha) = state {
                let z: C = alpha
                    .iter()
                    .zip(&g)
                    .zip(&modes)
                    .map(|((al, g), m)| al * g * C::from_polar(1.0, -m.omega * t))
                    .sum();
                cl += 2.0 * z.re;
            }
            (t, a * (w * s.chi(t)), cl)
        })
        .collect();
    let transform = |nu: f64| -> C { samples.iter().map(|&(t, a, _)| a * C::from_polar(1.0, nu * t)).sum() };
    let mut total = 0.0;
    for (i, (m, gn)) in modes.iter().zip(&g).enumerate() {
        let nbar = match state {
            GaussianFieldState::Thermal(n) => n[i],
            _ => 0.0,
        };
        let mut term = (1.0 + nbar) * transform(m.omega).norm_sqr();
        if nbar != 0.0 {
            term += nbar * transform(-m.omega).norm_sqr();
        }
        total += gn.norm_sqr() * term;
    }
    let classical: C = samples.iter().map(|&(_, a, cl)| a * cl).sum();
    total += classical.norm_sqr();
    Ok(d.coupling * d.coupling * total)
}
