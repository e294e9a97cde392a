use std::fmt;
use std::sync::Arc;

use cdl_geometry::Region;
use num_complex::Complex;

use crate::quadrature::GaussLegendre;
use crate::Real;

/// `∫_{−1}^{1} bump(u) du` for the peak-normalised bump.
pub const BUMP_AREA: f64 = 1.206_900_322_437_876_2;

/// Peak-normalised compact bump `exp(1 − 1/(1 − u²))` on `|u| < 1`.
pub fn bump<T: Real>(u: T) -> T {
    let one = T::one();
    let s = one - u * u;
    if s <= T::zero() {
        T::zero()
    } else {
        (one - one / s).exp()
    }
}

/// Separable smearing `χ(t) F(x)`.
///
/// `χ` peaks at 1; `F` has unit integral. Widths are half-widths. A zero
/// spatial width (or the `pointlike` flag) makes `F` a delta at `x_center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearingProfile<T = f64> {
    pub t_center: T,
    pub t_width: T,
    pub x_center: T,
    pub x_width: T,
    pub pointlike: bool,
}

impl<T: Real> SmearingProfile<T> {
    pub fn new(t_center: T, t_width: T, x_center: T, x_width: T) -> Self {
        Self { t_center, t_width, x_center, x_width, pointlike: x_width == T::zero() }
    }

    pub fn is_pointlike(&self) -> bool {
        self.pointlike || self.x_width == T::zero()
    }

    /// Same switching, delta in space.
    pub fn to_pointlike(&self) -> Self {
        Self { x_width: T::zero(), pointlike: true, ..*self }
    }

    pub fn chi(&self, t: T) -> T {
        bump((t - self.t_center) / self.t_width)
    }

    /// Spatial density `F(x)`; identically zero for a pointlike profile,
    /// whose spatial part is the delta handled by the transforms.
    pub fn spatial(&self, x: T) -> T {
        if self.is_pointlike() {
            return T::zero();
        }
        bump((x - self.x_center) / self.x_width) / (self.x_width * T::lit(BUMP_AREA))
    }

    pub fn eval(&self, t: T, x: T) -> T {
        self.chi(t) * self.spatial(x)
    }

    pub fn support(&self) -> Region<T> {
        let xw = if self.is_pointlike() { T::zero() } else { self.x_width };
        Region {
            t_min: self.t_center - self.t_width,
            t_max: self.t_center + self.t_width,
            x_min: self.x_center - xw,
            x_max: self.x_center + xw,
        }
    }

    /// `∫ χ(t) e^{iνt} dt`.
    pub fn switching_transform(&self, nu: T, q: &GaussLegendre<T>) -> Complex<T> {
        q.mapped(self.t_center, self.t_width)
            .zip(&q.nodes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, ((t, w), &u)| {
                acc + Complex::from_polar(w * bump(u), nu * t)
            })
    }

    /// `∫ F(x) e^{ikx} dx`.
    pub fn spatial_transform(&self, k: T, q: &GaussLegendre<T>) -> Complex<T> {
        if self.is_pointlike() {
            return Complex::from_polar(T::one(), k * self.x_center);
        }
        let area = T::lit(BUMP_AREA);
        q.nodes.iter().zip(&q.weights).fold(Complex::new(T::zero(), T::zero()), |acc, (&u, &w)| {
            acc + Complex::from_polar(w * bump(u) / area, k * (self.x_center + self.x_width * u))
        })
    }
}

/// A compactly supported spacetime function with its declared support.
#[derive(Clone)]
pub enum SpacetimeFunction<T = f64> {
    Separable(SmearingProfile<T>),
    General { profile: Arc<dyn Fn(T, T) -> T + Send + Sync>, support: Region<T> },
}

impl<T: Real> SpacetimeFunction<T> {
    pub fn general(support: Region<T>, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        SpacetimeFunction::General { profile: Arc::new(f), support }
    }

    pub fn eval(&self, t: T, x: T) -> T {
        match self {
            SpacetimeFunction::Separable(p) => p.eval(t, x),
            SpacetimeFunction::General { profile, support } => {
                let inside = t >= support.t_min
                    && t <= support.t_max
                    && x >= support.x_min
                    && x <= support.x_max;
                if inside {
                    profile(t, x)
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn support(&self) -> Region<T> {
        match self {
            SpacetimeFunction::Separable(p) => p.support(),
            SpacetimeFunction::General { support, .. } => *support,
        }
    }
}

impl<T: Real> From<SmearingProfile<T>> for SpacetimeFunction<T> {
    fn from(p: SmearingProfile<T>) -> Self {
        SpacetimeFunction::Separable(p)
    }
}

impl<T: fmt::Debug> fmt::Debug for SpacetimeFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpacetimeFunction::Separable(p) => f.debug_tuple("Separable").field(p).finish(),
            SpacetimeFunction::General { support, .. } => {
                f.debug_struct("General").field("support", support).finish_non_exhaustive()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_support() {
        assert_eq!(bump(0.0f64), 1.0);
        assert_eq!(bump(1.0f64), 0.0);
        assert_eq!(bump(-1.5f64), 0.0);
    }

    #[test]
    fn spatial_profile_has_unit_integral() {
        let p = SmearingProfile::new(0.0, 0.5, 1.0, 0.7);
        let q = GaussLegendre::new(96);
        let s: f64 = q.mapped(1.0, 0.7).map(|(x, w)| w * p.spatial(x)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((p.spatial_transform(0.0, &q).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointlike_transform_is_a_phase() {
        let p = SmearingProfile::new(0.0, 0.5, 1.0, 0.0);
        let q = GaussLegendre::new(8);
        let c = p.spatial_transform(2.0, &q);
        assert!((c - Complex::from_polar(1.0, 2.0)).norm() < 1e-15);
    }
}
