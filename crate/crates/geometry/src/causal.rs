use crate::{Convention, Event, GeometryError, Real, Region};

/// Causal relation between two disjoint regions, most specific tag first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CausalRelation {
    Spacelike,
    PrecedesAB,
    PrecedesBA,
    OrderableAFirst,
    OrderableBFirst,
    NotOrderable,
}

impl CausalRelation {
    /// The relation seen with the roles of A and B exchanged.
    pub fn mirror(self) -> Self {
        use CausalRelation::*;
        match self {
            Spacelike => Spacelike,
            PrecedesAB => PrecedesBA,
            PrecedesBA => PrecedesAB,
            OrderableAFirst => OrderableBFirst,
            OrderableBFirst => OrderableAFirst,
            NotOrderable => NotOrderable,
        }
    }

    /// True if A can be ordered before B (J⁻(A) ∩ B = ∅).
    pub fn a_can_come_first(self) -> bool {
        use CausalRelation::*;
        matches!(self, Spacelike | PrecedesAB | OrderableAFirst)
    }

    /// True if B can be ordered before A (J⁻(B) ∩ A = ∅).
    pub fn b_can_come_first(self) -> bool {
        use CausalRelation::*;
        matches!(self, Spacelike | PrecedesBA | OrderableBFirst)
    }

    pub fn is_orderable(self) -> bool {
        self != CausalRelation::NotOrderable
    }

    pub fn name(self) -> &'static str {
        use CausalRelation::*;
        match self {
            Spacelike => "Spacelike",
            PrecedesAB => "PrecedesAB",
            PrecedesBA => "PrecedesBA",
            OrderableAFirst => "OrderableAFirst",
            OrderableBFirst => "OrderableBFirst",
            NotOrderable => "NotOrderable",
        }
    }
}

impl std::fmt::Display for CausalRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `e ∈ J⁺(r)`: some point of `r` lies in the causal past of `e`.
///
/// The optimal witness is `(r.t_min, clamp(e.x))`, which maximises the time
/// lag and minimises the spatial separation at once.
pub fn in_causal_future<T: Real>(e: &Event<T>, r: &Region<T>, conv: Convention) -> bool {
    conv.reaches(e.t - r.t_min, r.x_distance(e.x))
}

/// `e ∈ J⁻(r)`.
pub fn in_causal_past<T: Real>(e: &Event<T>, r: &Region<T>, conv: Convention) -> bool {
    conv.reaches(r.t_max - e.t, r.x_distance(e.x))
}

/// `b ∩ J⁺(a) ≠ ∅`.
pub(crate) fn future_meets<T: Real>(a: &Region<T>, b: &Region<T>, conv: Convention) -> bool {
    conv.reaches(b.t_max - a.t_min, a.x_gap(b))
}

/// `b ⊂ J⁺(a)`.
pub(crate) fn future_contains<T: Real>(a: &Region<T>, b: &Region<T>, conv: Convention) -> bool {
    conv.reaches(b.t_min - a.t_min, a.x_reach(b))
}

/// `a ⊂ J⁻(b)`.
pub(crate) fn past_contains<T: Real>(b: &Region<T>, a: &Region<T>, conv: Convention) -> bool {
    conv.reaches(b.t_max - a.t_max, b.x_reach(a))
}

/// Classify the causal relation between two disjoint rectangles.
///
/// Precedence is reported only when the corresponding orderability holds as
/// well, so every Precedes* tag implies its Orderable* condition.
pub fn classify_causal<T: Real>(
    a: &Region<T>,
    b: &Region<T>,
    conv: Convention,
) -> Result<CausalRelation, GeometryError> {
    if a.intersects(b, conv) {
        return Err(GeometryError::OverlappingRegions);
    }
    let b_meets_future_a = future_meets(a, b, conv);
    let b_meets_past_a = future_meets(b, a, conv);
    let a_first = !b_meets_past_a;
    let b_first = !b_meets_future_a;
    Ok(if a_first && b_first {
        CausalRelation::Spacelike
    } else if a_first {
        if future_contains(a, b, conv) && past_contains(b, a, conv) {
            CausalRelation::PrecedesAB
        } else {
            CausalRelation::OrderableAFirst
        }
    } else if b_first {
        if future_contains(b, a, conv) && past_contains(a, b, conv) {
            CausalRelation::PrecedesBA
        } else {
            CausalRelation::OrderableBFirst
        }
    } else {
        CausalRelation::NotOrderable
    })
}
