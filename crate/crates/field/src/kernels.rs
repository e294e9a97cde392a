use cdl_geometry::Event;
use num_complex::Complex;

use crate::{FieldSpec, Real};

/// Gaussian field state, described per mode in the order of
/// [`FieldSpec::modes`].
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianFieldState<T = f64> {
    Vacuum,
    /// Displaced vacuum `a_n |ψ⟩ = α_n |ψ⟩`.
    Coherent(Vec<Complex<T>>),
    /// Mean occupations `n̄_n ≥ 0`.
    Thermal(Vec<T>),
}

impl<T: Real> GaussianFieldState<T> {
    fn check_shape(&self, spec: &FieldSpec<T>) {
        let len = match self {
            GaussianFieldState::Vacuum => return,
            GaussianFieldState::Coherent(a) => a.len(),
            GaussianFieldState::Thermal(n) => n.len(),
        };
        assert_eq!(len, spec.mode_count(), "state has {len} modes, field has {}", spec.mode_count());
    }

    /// One-point function `⟨φ(e)⟩` (nonzero only for coherent states).
    pub fn mean_field(&self, e: &Event<T>, spec: &FieldSpec<T>) -> T {
        match self {
            GaussianFieldState::Coherent(alpha) => {
                self.check_shape(spec);
                let two = T::lit(2.0);
                spec.modes()
                    .iter()
                    .zip(alpha)
                    .map(|(m, a)| {
                        let u = Complex::from_polar(T::one(), m.k * e.x - m.omega * e.t)
                            / (two * m.omega * spec.length).sqrt();
                        two * (a * u).re
                    })
                    .fold(T::zero(), |s, v| s + v)
            }
            _ => T::zero(),
        }
    }
}

/// `−i[φ(x), φ(y)] = −(1/L) Σ_n sin(ω_n Δt) cos(k_n Δx) / ω_n`.
///
/// The ±n terms are paired so the result is exactly odd under `x ↔ y` and
/// exactly zero at equal times.
pub fn pauli_jordan<T: Real>(x: &Event<T>, y: &Event<T>, spec: &FieldSpec<T>) -> T {
    let dt = x.t - y.t;
    let dx = x.x - y.x;
    let mut sum = T::zero();
    for m in spec.modes() {
        sum = sum + (m.omega * dt).sin() * (m.k * dx).cos() / m.omega;
    }
    -sum / spec.length
}

/// `⟨φ(x) φ(y)⟩` in a Gaussian state.
///
/// # Panics
/// If the state's mode data does not match `spec`.
pub fn wightman<T: Real>(
    x: &Event<T>,
    y: &Event<T>,
    state: &GaussianFieldState<T>,
    spec: &FieldSpec<T>,
) -> Complex<T> {
    state.check_shape(spec);
    let dt = x.t - y.t;
    let dx = x.x - y.x;
    let two = T::lit(2.0);
    let mut sum = Complex::new(T::zero(), T::zero());
    for (i, m) in spec.modes().iter().enumerate() {
        let phase = Complex::from_polar(T::one(), m.k * dx - m.omega * dt);
        let scale = T::one() / (two * m.omega * spec.length);
        let term = match state {
            GaussianFieldState::Thermal(nbar) => {
                let nb = nbar[i];
                phase * (T::one() + nb) + phase.conj() * nb
            }
            _ => phase,
        };
        sum = sum + term * scale;
    }
    if let GaussianFieldState::Coherent(_) = state {
        sum = sum + Complex::new(state.mean_field(x, spec) * state.mean_field(y, spec), T::zero());
    }
    sum
}
