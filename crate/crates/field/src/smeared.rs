use cdl_geometry::{Event, Region};
use num_complex::Complex;

use crate::quadrature::GaussLegendre;
use crate::{FieldError, FieldSpec, GaussianFieldState, Real, SpacetimeFunction};

/// Coefficients `c_n` of `φ(g) = Σ_n (c_n a_n + c_n* a_n†)`, ordered as
/// [`FieldSpec::modes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients<T = f64> {
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> ModeCoefficients<T> {
    pub fn norm(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, c| s + c.norm_sqr()).sqrt()
    }

    /// `‖self − other‖ / ‖other‖` (absolute if `other` vanishes).
    pub fn relative_distance(&self, other: &Self) -> T {
        let diff = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |s, (a, b)| s + (a - b).norm_sqr())
            .sqrt();
        let scale = other.norm();
        if scale > T::zero() {
            diff / scale
        } else {
            diff
        }
    }
}

/// A value computed at two quadrature resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementCheck<V, T = f64> {
    pub value: V,
    pub refined: V,
    pub rel_change: T,
}

impl<V, T: Real> RefinementCheck<V, T> {
    pub fn passes(&self, tol: T) -> bool {
        self.rel_change <= tol
    }
}

/// Weyl kick `e^{iλ φ(f)}`.
#[derive(Debug, Clone)]
pub struct Kick<T = f64> {
    pub profile: SpacetimeFunction<T>,
    pub lambda: T,
}

impl<T: Real> Kick<T> {
    /// Coherent amplitudes `β_n = iλ c_n*` of the kicked vacuum.
    pub fn amplitudes(&self, spec: &FieldSpec<T>, order: usize) -> Result<Vec<Complex<T>>, FieldError> {
        let c = smeared_mode_coeffs(&self.profile, spec, order)?;
        let i_lambda = Complex::new(T::zero(), self.lambda);
        Ok(c.coeffs.iter().map(|c| i_lambda * c.conj()).collect())
    }

    pub fn kicked_vacuum(&self, spec: &FieldSpec<T>, order: usize) -> Result<GaussianFieldState<T>, FieldError> {
        Ok(GaussianFieldState::Coherent(self.amplitudes(spec, order)?))
    }
}

pub(crate) fn check_inside<T: Real>(r: &Region<T>, spec: &FieldSpec<T>) -> Result<(), FieldError> {
    let h = spec.half_length();
    if r.x_min < -h || r.x_max > h {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        return Err(FieldError::SupportOutsideDomain {
            lo: f(r.x_min),
            hi: f(r.x_max),
            half_length: f(h),
        });
    }
    Ok(())
}

/// `c_n = ∫ dt dx g(t, x) u_n(t, x)` by tensor Gauss-Legendre quadrature of
/// the given order per axis (closed-form factorisation for separable `g`).
pub fn smeared_mode_coeffs<T: Real>(
    g: &SpacetimeFunction<T>,
    spec: &FieldSpec<T>,
    order: usize,
) -> Result<ModeCoefficients<T>, FieldError> {
    check_inside(&g.support(), spec)?;
    let q = GaussLegendre::<T>::new(order);
    let two = T::lit(2.0);
    let coeffs = match g {
        SpacetimeFunction::Separable(p) => spec
            .modes()
            .iter()
            .map(|m| {
                p.switching_transform(-m.omega, &q) * p.spatial_transform(m.k, &q)
                    / (two * m.omega * spec.length).sqrt()
            })
            .collect(),
        SpacetimeFunction::General { .. } => {
            let r = g.support();
            let (tc, tw) = ((r.t_min + r.t_max) / two, (r.t_max - r.t_min) / two);
            let (xc, xw) = ((r.x_min + r.x_max) / two, (r.x_max - r.x_min) / two);
            let samples: Vec<(T, T, T)> = q
                .mapped(tc, tw)
                .flat_map(|(t, wt)| q.mapped(xc, xw).map(move |(x, wx)| (t, x, wt * wx)))
                .map(|(t, x, w)| (t, x, w * g.eval(t, x)))
                .collect();
            spec.modes()
                .iter()
                .map(|m| {
                    let s = samples.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(t, x, w)| {
                        acc + Complex::from_polar(w, m.k * x - m.omega * t)
                    });
                    s / (two * m.omega * spec.length).sqrt()
                })
                .collect()
        }
    };
    Ok(ModeCoefficients { coeffs })
}

/// Coefficients at `order` and `factor × order` with their relative change.
pub fn smeared_mode_coeffs_checked<T: Real>(
    g: &SpacetimeFunction<T>,
    spec: &FieldSpec<T>,
    order: usize,
    factor: usize,
) -> Result<RefinementCheck<ModeCoefficients<T>, T>, FieldError> {
    let value = smeared_mode_coeffs(g, spec, order)?;
    let refined = smeared_mode_coeffs(g, spec, order * factor.max(1))?;
    let rel_change = value.relative_distance(&refined);
    Ok(RefinementCheck { value, refined, rel_change })
}

/// `⟨φ(e)⟩` in the kicked vacuum `e^{iλ φ(f)}|0⟩`, equal to
/// `λ ∫ f(y) PJ(y, e) dy`.
pub fn classical_field<T: Real>(
    kick: &Kick<T>,
    e: &Event<T>,
    spec: &FieldSpec<T>,
    order: usize,
) -> Result<T, FieldError> {
    Ok(kick.kicked_vacuum(spec, order)?.mean_field(e, spec))
}

/// `∫∫ g1(x) g2(y) PJ(x, y) = 2 Im Σ_n c_n(g1) c_n(g2)*`.
pub fn smeared_commutator<T: Real>(
    g1: &SpacetimeFunction<T>,
    g2: &SpacetimeFunction<T>,
    spec: &FieldSpec<T>,
    order: usize,
) -> Result<T, FieldError> {
    let c1 = smeared_mode_coeffs(g1, spec, order)?;
    let c2 = smeared_mode_coeffs(g2, spec, order)?;
    let s = c1
        .coeffs
        .iter()
        .zip(&c2.coeffs)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj());
    Ok(T::lit(2.0) * s.im)
}
