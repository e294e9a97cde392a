use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use cdl_field::quadrature::GaussLegendre;
use cdl_field::{FieldSpec, SmearingProfile};
use cdl_geometry::{Event, Real, Region};
use num_complex::Complex;

use crate::{monopole, DetectorError, Op2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    A,
    B,
    C,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
        })
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Label::A),
            "B" | "b" => Ok(Label::B),
            "C" | "c" => Ok(Label::C),
            other => Err(format!("unknown detector label {other:?}")),
        }
    }
}

/// Detector-side factor of the coupling.
#[derive(Clone, Default)]
pub enum Current<T = f64> {
    #[default]
    Monopole,
    /// Hermitian 2×2 current as a function of time.
    Custom(Arc<dyn Fn(T) -> Op2<T> + Send + Sync>),
}

impl<T> fmt::Debug for Current<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Current::Monopole => f.write_str("Monopole"),
            Current::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectorSpec<T = f64> {
    pub label: Label,
    pub gap: T,
    pub coupling: T,
    pub smearing: SmearingProfile<T>,
    pub initial_state: Op2<T>,
    pub current: Current<T>,
}

impl<T: Real> DetectorSpec<T> {
    /// Ground-state detector with the monopole current.
    pub fn new(label: Label, gap: T, coupling: T, smearing: SmearingProfile<T>) -> Self {
        Self { label, gap, coupling, smearing, initial_state: Op2::ground(), current: Current::Monopole }
    }

    pub fn with_initial_state(mut self, rho: Op2<T>) -> Result<Self, DetectorError> {
        self.initial_state = rho;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupling(&self, coupling: T) -> Self {
        Self { coupling, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let s = &self.smearing;
        let bad = |r: &str| Err(DetectorError::InvalidSmearing(format!("detector {}: {r}", self.label)));
        if !(s.t_width > T::zero()) {
            return bad("t_width must be positive");
        }
        if s.x_width < T::zero() {
            return bad("x_width must be non-negative");
        }
        if ![s.t_center, s.t_width, s.x_center, s.x_width, self.gap, self.coupling].iter().all(|v| v.is_finite()) {
            return bad("non-finite parameter");
        }
        let rho = &self.initial_state;
        let tol = T::lit(1e-10);
        let fail = |reason: &str| {
            Err(DetectorError::InvalidState { label: self.label.to_string(), reason: reason.into() })
        };
        if rho.hermiticity_defect() > tol {
            return fail("not Hermitian");
        }
        if (rho.trace().re - T::one()).abs() > tol {
            return fail("trace differs from 1");
        }
        if rho.hermitian_eigenvalues()[0] < -tol {
            return fail("negative eigenvalue");
        }
        Ok(())
    }

    pub fn current_at(&self, t: T) -> Op2<T> {
        match &self.current {
            Current::Monopole => monopole(t, self.gap),
            Current::Custom(f) => f(t),
        }
    }

    pub fn support(&self) -> Region<T> {
        self.smearing.support()
    }

    /// `tr(ρ₀ J(t))`, the classical source a coherent detector presents.
    pub fn current_expectation(&self, t: T) -> Complex<T> {
        (self.initial_state * self.current_at(t)).trace()
    }
}

/// `(λ Λ(e), J(e.t))`. For a pointlike profile the scalar is the weight of
/// the delta, `λ χ(t)`, on the worldline and zero elsewhere.
pub fn interaction_weight<T: Real>(d: &DetectorSpec<T>, e: &Event<T>) -> (T, Op2<T>) {
    let s = &d.smearing;
    let scalar = if s.is_pointlike() {
        if e.x == s.x_center {
            d.coupling * s.chi(e.t)
        } else {
            T::zero()
        }
    } else {
        d.coupling * s.eval(e.t, e.x)
    };
    (scalar, d.current_at(e.t))
}

/// Mode data needed to assemble the detector Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor<T = f64> {
    /// `F̂_n = ∫ F(x) e^{i k_n x} dx`.
    pub spatial: Vec<Complex<T>>,
    /// `g_n = F̂_n / √(2 ω_n L)`, so `∫F φ = Σ (g_n e^{−iω_n t} a_n + h.c.)`.
    pub coupling: Vec<Complex<T>>,
    pub times: Vec<T>,
    pub switching: Vec<T>,
}

pub fn detector_form_factor<T: Real>(
    d: &DetectorSpec<T>,
    spec: &FieldSpec<T>,
    order: usize,
    samples: usize,
) -> Result<FormFactor<T>, DetectorError> {
    let r = d.support();
    let h = spec.half_length();
    if r.x_min < -h || r.x_max > h {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        return Err(cdl_field::FieldError::SupportOutsideDomain {
            lo: f(r.x_min),
            hi: f(r.x_max),
            half_length: f(h),
        }
        .into());
    }
    let q = GaussLegendre::<T>::new(order);
    let two = T::lit(2.0);
    let modes = spec.modes();
    let spatial: Vec<Complex<T>> = modes.iter().map(|m| d.smearing.spatial_transform(m.k, &q)).collect();
    let coupling = spatial
        .iter()
        .zip(&modes)
        .map(|(f, m)| f / (two * m.omega * spec.length).sqrt())
        .collect();
    let n = samples.max(2);
    let times: Vec<T> = (0..n)
        .map(|i| r.t_min + (r.t_max - r.t_min) * T::lit(i as f64) / T::lit((n - 1) as f64))
        .collect();
    let switching = times.iter().map(|&t| d.smearing.chi(t)).collect();
    Ok(FormFactor { spatial, coupling, times, switching })
}

/// Same detector with a delta spatial profile.
pub fn pointlike_limit<T: Real>(d: &DetectorSpec<T>) -> DetectorSpec<T> {
    DetectorSpec { smearing: d.smearing.to_pointlike(), ..d.clone() }
}

/// `−i[Φ₁(t), Φ₂(s)]` for spatially smeared fields with coupling
/// coefficients `g1`, `g2`: `2 Im Σ g1 g2* e^{−iω(t−s)}`.
pub fn smeared_pauli_jordan<T: Real>(
    g1: &[Complex<T>],
    g2: &[Complex<T>],
    spec: &FieldSpec<T>,
    t: T,
    s: T,
) -> T {
    let mut acc = Complex::new(T::zero(), T::zero());
    for ((a, b), m) in g1.iter().zip(g2).zip(spec.modes()) {
        acc = acc + a * b.conj() * Complex::from_polar(T::one(), -m.omega * (t - s));
    }
    T::lit(2.0) * acc.im
}

/// `∫∫ χ₁(t) χ₂(s) |−i[Φ₁(t), Φ₂(s)]| dt ds`: the size of the commutator
/// between two detectors' smeared fields, used as a microcausality floor.
pub fn commutator_floor<T: Real>(
    d1: &DetectorSpec<T>,
    d2: &DetectorSpec<T>,
    spec: &FieldSpec<T>,
    order: usize,
) -> Result<T, DetectorError> {
    let f1 = detector_form_factor(d1, spec, order, 2)?;
    let f2 = detector_form_factor(d2, spec, order, 2)?;
    let q = GaussLegendre::<T>::new(order);
    let (s1, s2) = (&d1.smearing, &d2.smearing);
    let mut total = T::zero();
    for (t, wt) in q.mapped(s1.t_center, s1.t_width) {
        let c1 = s1.chi(t);
        for (s, ws) in q.mapped(s2.t_center, s2.t_width) {
            let pj = smeared_pauli_jordan(&f1.coupling, &f2.coupling, spec, t, s);
            total = total + wt * ws * c1 * s2.chi(s) * pj.abs();
        }
    }
    Ok(total)
}
