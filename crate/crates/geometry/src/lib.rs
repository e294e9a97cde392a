//! Exact causal-structure computations for compact spacetime rectangles in
//! 1+1D Minkowski space (c = 1).
//!
//! All predicates work on corner coordinates in closed form; no sampling is
//! involved. The [`sampling`] module provides an independent pointwise
//! oracle used by the tests.

mod causal;
mod foliation;
mod region;
pub mod sampling;

pub use causal::{classify_causal, in_causal_future, in_causal_past, CausalRelation};
pub use foliation::{
    boost_event, boosted_time_range, foliation_witnesses, precedes_wrt_flat_foliation,
    precedes_after_boost, rapidity_grid, FoliationWitness,
};
pub use region::{Convention, Event, Region};

use std::fmt::{Debug, Display};

/// Scalar type accepted by the generic numerical core.
pub trait Real:
    num_traits::Float + num_traits::FloatConst + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from(v).expect("literal representable")
    }
}

impl<T> Real for T where
    T: num_traits::Float + num_traits::FloatConst + Debug + Display + Default + Send + Sync + 'static
{
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("regions overlap; relation tags assume disjoint supports")]
    OverlappingRegions,
}

pub type Event64 = Event<f64>;
pub type Event32 = Event<f32>;
pub type Region64 = Region<f64>;
pub type Region32 = Region<f32>;
