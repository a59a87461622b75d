//! Scalar abstraction shared by every score, weight, and timestamp.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the engine computes in.
///
/// Implemented for `f32` and `f64`. Similarity needs a square root for
/// normalization, so exact rationals are not supported.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal converts to scalar")
    }

    /// Lossy view as `f64`, for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// True when `self` lies in the closed unit interval.
    fn in_unit(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Orders two finite scalars, treating incomparable values as equal.
pub(crate) fn cmp<S: Scalar>(a: S, b: S) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Arithmetic mean; `None` for an empty iterator.
pub(crate) fn mean<S: Scalar>(values: impl IntoIterator<Item = S>) -> Option<S> {
    let mut sum = S::zero();
    let mut n = 0usize;
    for v in values {
        sum = sum + v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / S::from_usize(n).expect("count fits scalar"))
    }
}
