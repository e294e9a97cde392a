use std::ops::{Add, Mul, Sub};

use cdl_geometry::Real;
use num_complex::Complex;

/// 2×2 complex matrix in the basis `(ground, excited)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op2<T = f64>(pub [[Complex<T>; 2]; 2]);

impl<T: Real> Op2<T> {
    pub fn from_real(m: [[T; 2]; 2]) -> Self {
        let c = |v: T| Complex::new(v, T::zero());
        Op2([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn zero() -> Self {
        Self::from_real([[T::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    /// `σ⁺ = |e⟩⟨g|`.
    pub fn raising() -> Self {
        Self::from_real([[T::zero(), T::zero()], [T::one(), T::zero()]])
    }

    /// `σ⁻ = |g⟩⟨e|`.
    pub fn lowering() -> Self {
        Self::raising().adjoint()
    }

    pub fn ground() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::zero()]])
    }

    pub fn excited() -> Self {
        Self::from_real([[T::zero(), T::zero()], [T::zero(), T::one()]])
    }

    /// `|+⟩⟨+|` with `|+⟩ = (|g⟩ + |e⟩)/√2`.
    pub fn plus() -> Self {
        let h = T::lit(0.5);
        Self::from_real([[h, h], [h, h]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Op2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex<T> {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = &self.0;
        Op2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    pub fn hermiticity_defect(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [T; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let mean = (a + d) / T::lit(2.0);
        let r = (((a - d) / T::lit(2.0)).powi(2) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// `½ ‖self − other‖₁` for Hermitian arguments.
    pub fn trace_distance(&self, other: &Self) -> T {
        let diff = *self - *other;
        let [l0, l1] = diff.hermitian_eigenvalues();
        (l0.abs() + l1.abs()) / T::lit(2.0)
    }
}

impl<T: Real> Add for Op2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][j] + o.0[i][j];
            }
        }
        r
    }
}

impl<T: Real> Sub for Op2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(Complex::new(-T::one(), T::zero()))
    }
}

impl<T: Real> Mul for Op2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Op2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

/// `μ(t) = e^{iΩt} σ⁺ + e^{−iΩt} σ⁻`.
pub fn monopole<T: Real>(t: T, gap: T) -> Op2<T> {
    let p = Complex::from_polar(T::one(), gap * t);
    let z = Complex::new(T::zero(), T::zero());
    Op2([[z, p.conj()], [p, z]])
}
