use crate::{FieldError, Real};

/// One cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T = f64> {
    pub n: i64,
    pub k: T,
    pub omega: T,
}

/// Cavity length `L`, mass `m`, and cutoff `N` (modes `−N..=N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec<T = f64> {
    pub length: T,
    pub mass: T,
    pub cutoff: usize,
}

impl<T: Real> FieldSpec<T> {
    pub fn new(length: T, mass: T, cutoff: usize) -> Result<Self, FieldError> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(FieldError::InvalidSpec(format!("L must be positive, got {length}")));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(FieldError::InvalidSpec(format!("m must be positive, got {mass}")));
        }
        if cutoff < 1 {
            return Err(FieldError::InvalidSpec("N must be at least 1".into()));
        }
        Ok(Self { length, mass, cutoff })
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { cutoff, ..*self }
    }

    pub fn mode_count(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Mode index `n` stored at position `i`.
    pub fn n_at(&self, i: usize) -> i64 {
        i as i64 - self.cutoff as i64
    }

    pub fn mode(&self, n: i64) -> Mode<T> {
        let k = T::TAU() * T::lit(n as f64) / self.length;
        Mode { n, k, omega: (k * k + self.mass * self.mass).sqrt() }
    }

    pub fn modes(&self) -> Vec<Mode<T>> {
        (0..self.mode_count()).map(|i| self.mode(self.n_at(i))).collect()
    }

    pub fn half_length(&self) -> T {
        self.length / T::lit(2.0)
    }
}

impl Default for FieldSpec<f64> {
    fn default() -> Self {
        Self { length: 20.0, mass: 1.0, cutoff: 64 }
    }
}
