//! Scalar abstraction for feature weights.
//!
//! Every kernel in the crate is generic over [`Weight`], implemented for
//! `f32` and `f64`. The on-disk index always stores `f64`, so an `f32` index
//! round-trips losslessly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable as a feature weight.
pub trait Weight:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar, rounding as `as` would.
    fn lit(v: f64) -> Self;

    /// Widens to `f64` for reporting and persistence.
    fn as_f64(self) -> f64;
}

impl Weight for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Weight for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Descending score, ascending key. `a` sorts before `b` when it ranks higher.
#[inline]
pub(crate) fn rank_order<T: Weight, K: Ord>(a: (T, K), b: (T, K)) -> std::cmp::Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.1.cmp(&b.1))
}
