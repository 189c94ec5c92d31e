//! Floating point abstraction shared by preprocessing and the classifiers.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for feature values and model parameters.
///
/// Implemented for `f32` and `f64`. `Display`/`FromStr` must round-trip
/// exactly; model files rely on that for lossless persistence.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + FromStr + Debug + Default + Sum + Send + Sync + 'static
{
    /// Converts a small constant, panicking only on a programming error.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Display + FromStr + Debug + Default + Sum + Send + Sync + 'static
{
}
