use crate::{GeometryError, Real};

/// A spacetime point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Event<T = f64> {
    pub t: T,
    pub x: T,
}

impl<T: Real> Event<T> {
    pub fn new(t: T, x: T) -> Self {
        Self { t, x }
    }

    /// Retarded null coordinate t − x.
    pub fn u(&self) -> T {
        self.t - self.x
    }

    /// Advanced null coordinate t + x.
    pub fn v(&self) -> T {
        self.t + self.x
    }
}

/// Boundary convention for light cones and overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// J± are closed: null-related points are causally related and
    /// touching rectangles intersect.
    #[default]
    Closed,
    /// Strict inequalities throughout.
    Open,
}

impl Convention {
    /// `lhs ≥ rhs` (closed) or `lhs > rhs` (open).
    pub(crate) fn reaches<T: Real>(self, lhs: T, rhs: T) -> bool {
        match self {
            Convention::Closed => lhs >= rhs,
            Convention::Open => lhs > rhs,
        }
    }
}

/// Axis-aligned compact rectangle `[t_min, t_max] × [x_min, x_max]`.
///
/// `x_min == x_max` is accepted to represent the worldline segment of a
/// pointlike detector; the time extent must be nonempty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T = f64> {
    pub t_min: T,
    pub t_max: T,
    pub x_min: T,
    pub x_max: T,
}

impl<T: Real> Region<T> {
    pub fn new(t_min: T, t_max: T, x_min: T, x_max: T) -> Result<Self, GeometryError> {
        let finite = [t_min, t_max, x_min, x_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidRegion("non-finite corner".into()));
        }
        if !(t_min < t_max) {
            return Err(GeometryError::InvalidRegion(format!(
                "t_min {t_min} must be below t_max {t_max}"
            )));
        }
        if !(x_min <= x_max) {
            return Err(GeometryError::InvalidRegion(format!(
                "x_min {x_min} exceeds x_max {x_max}"
            )));
        }
        Ok(Self { t_min, t_max, x_min, x_max })
    }

    /// Rectangle centred at `(tc, xc)` with half-widths `(tw, xw)`.
    pub fn centered(tc: T, tw: T, xc: T, xw: T) -> Result<Self, GeometryError> {
        Self::new(tc - tw, tc + tw, xc - xw, xc + xw)
    }

    pub fn corners(&self) -> [Event<T>; 4] {
        [
            Event::new(self.t_min, self.x_min),
            Event::new(self.t_min, self.x_max),
            Event::new(self.t_max, self.x_min),
            Event::new(self.t_max, self.x_max),
        ]
    }

    pub fn contains(&self, e: &Event<T>) -> bool {
        e.t >= self.t_min && e.t <= self.t_max && e.x >= self.x_min && e.x <= self.x_max
    }

    pub fn intersects(&self, other: &Self, conv: Convention) -> bool {
        conv.reaches(self.t_max, other.t_min)
            && conv.reaches(other.t_max, self.t_min)
            && conv.reaches(self.x_max, other.x_min)
            && conv.reaches(other.x_max, self.x_min)
    }

    /// Distance from `x` to the spatial interval.
    pub fn x_distance(&self, x: T) -> T {
        if x < self.x_min {
            self.x_min - x
        } else if x > self.x_max {
            x - self.x_max
        } else {
            T::zero()
        }
    }

    /// Gap between the two spatial intervals (zero if they overlap).
    pub fn x_gap(&self, other: &Self) -> T {
        let left = other.x_min - self.x_max;
        let right = self.x_min - other.x_max;
        left.max(right).max(T::zero())
    }

    /// Largest distance from an endpoint of `other`'s interval to this one.
    pub(crate) fn x_reach(&self, other: &Self) -> T {
        self.x_distance(other.x_min).max(self.x_distance(other.x_max))
    }

    pub fn duration(&self) -> T {
        self.t_max - self.t_min
    }

    pub fn extent(&self) -> T {
        self.x_max - self.x_min
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            t_min: self.t_min.min(other.t_min),
            t_max: self.t_max.max(other.t_max),
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
        }
    }
}
