//! Pointwise dense-sampling oracle for the causal predicates.
//!
//! Each region is replaced by a lattice of sample events (corners
//! included) and every set-level condition is checked pair by pair. Used to
//! cross-check the closed-form classifier.

use crate::{CausalRelation, Convention, Event, Real, Region};

/// Events of `r` on a lattice with spacing at most `h` along each axis,
/// endpoints included. A degenerate axis contributes one sample.
pub fn sample_lattice<T: Real>(r: &Region<T>, h: T) -> Vec<Event<T>> {
    let count = |len: T| -> usize {
        if len <= T::zero() {
            1
        } else {
            (len / h).ceil().to_usize().unwrap_or(1).max(1) + 1
        }
    };
    let axis = |lo: T, hi: T, n: usize| -> Vec<T> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit((n - 1) as f64)).collect()
    };
    let ts = axis(r.t_min, r.t_max, count(r.duration()));
    let xs = axis(r.x_min, r.x_max, count(r.extent()));
    ts.iter().flat_map(|&t| xs.iter().map(move |&x| Event::new(t, x))).collect()
}

/// `q` lies in the causal future of `p`.
pub fn point_precedes<T: Real>(p: &Event<T>, q: &Event<T>, conv: Convention) -> bool {
    let dt = q.t - p.t;
    let dx = (q.x - p.x).abs();
    match conv {
        Convention::Closed => dt >= dx,
        Convention::Open => dt > dx,
    }
}

/// Classification from sampled events only. `None` signals an overlap.
pub fn classify_sampled<T: Real>(
    a: &[Event<T>],
    b: &[Event<T>],
    ra: &Region<T>,
    rb: &Region<T>,
    conv: Convention,
) -> Option<CausalRelation> {
    let inside = |e: &Event<T>, r: &Region<T>| match conv {
        Convention::Closed => r.contains(e),
        Convention::Open => e.t > r.t_min && e.t < r.t_max && e.x > r.x_min && e.x < r.x_max,
    };
    if a.iter().any(|e| inside(e, rb)) || b.iter().any(|e| inside(e, ra)) {
        return None;
    }
    let b_in_future_a = b.iter().any(|q| a.iter().any(|p| point_precedes(p, q, conv)));
    let b_in_past_a = b.iter().any(|q| a.iter().any(|p| point_precedes(q, p, conv)));
    let all_b_after_a = b.iter().all(|q| a.iter().any(|p| point_precedes(p, q, conv)));
    let all_a_before_b = a.iter().all(|p| b.iter().any(|q| point_precedes(p, q, conv)));
    let all_a_after_b = a.iter().all(|p| b.iter().any(|q| point_precedes(q, p, conv)));
    let all_b_before_a = b.iter().all(|q| a.iter().any(|p| point_precedes(q, p, conv)));
    let a_first = !b_in_past_a;
    let b_first = !b_in_future_a;
    Some(if a_first && b_first {
        CausalRelation::Spacelike
    } else if a_first {
        if all_b_after_a && all_a_before_b {
            CausalRelation::PrecedesAB
        } else {
            CausalRelation::OrderableAFirst
        }
    } else if b_first {
        if all_a_after_b && all_b_before_a {
            CausalRelation::PrecedesBA
        } else {
            CausalRelation::OrderableBFirst
        }
    } else {
        CausalRelation::NotOrderable
    })
}
