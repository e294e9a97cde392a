use crate::{Event, Real, Region};

/// `A.t_max < B.t_min`: A precedes B on the constant-t slices.
pub fn precedes_wrt_flat_foliation<T: Real>(a: &Region<T>, b: &Region<T>) -> bool {
    a.t_max < b.t_min
}

/// Lorentz boost with rapidity `eta`.
pub fn boost_event<T: Real>(e: &Event<T>, eta: T) -> Event<T> {
    let (c, s) = (eta.cosh(), eta.sinh());
    Event::new(c * e.t - s * e.x, c * e.x - s * e.t)
}

/// Range of boosted time over a rectangle (extremes sit at corners).
pub fn boosted_time_range<T: Real>(r: &Region<T>, eta: T) -> (T, T) {
    r.corners().iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), e| {
        let t = boost_event(e, eta).t;
        (lo.min(t), hi.max(t))
    })
}

/// A precedes B on the slices of the frame with rapidity `eta`.
pub fn precedes_after_boost<T: Real>(a: &Region<T>, b: &Region<T>, eta: T) -> bool {
    boosted_time_range(a, eta).1 < boosted_time_range(b, eta).0
}

/// Uniform rapidity grid of `n` points on `[lo, hi]`.
pub fn rapidity_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n < 2 {
        return vec![(lo + hi) / T::lit(2.0)];
    }
    let step = (hi - lo) / T::lit((n - 1) as f64);
    (0..n).map(|i| lo + step * T::lit(i as f64)).collect()
}

/// First rapidities on a grid at which each ordering is achieved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationWitness<T = f64> {
    pub a_first: Option<T>,
    pub b_first: Option<T>,
}

pub fn foliation_witnesses<T: Real>(a: &Region<T>, b: &Region<T>, grid: &[T]) -> FoliationWitness<T> {
    FoliationWitness {
        a_first: grid.iter().copied().find(|&eta| precedes_after_boost(a, b, eta)),
        b_first: grid.iter().copied().find(|&eta| precedes_after_boost(b, a, eta)),
    }
}
