//! Floating-point scalar abstraction shared by the numeric kernels.
//!
//! Vector math, the TF-IDF and dense indices, the hashed embedder and the
//! token-matching scorer are all generic over [`Scalar`], so the same code
//! runs in `f32` (compact indices) or `f64` (the default used by the
//! pipeline and the CLI).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar usable in similarity computations.
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
    /// Lossy conversion from `f64`; every supported scalar can represent
    /// (an approximation of) any finite `f64`.
    #[inline]
    fn of(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite f64 is representable")
    }

    /// Lossless-enough conversion back to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }

    /// Conversion from a count.
    #[inline]
    fn of_usize(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("count is representable")
    }
}

impl<T> Scalar for T where
    T: Float
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
}
