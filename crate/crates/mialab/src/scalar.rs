//! Scalar abstraction for the numeric core.
//!
//! All model math is generic over [`Scalar`] so the same code runs in `f32`
//! or `f64`. Configuration values stay `f64` and are converted at the
//! boundary with [`cast`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable for network parameters and features.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` configuration value into the working scalar type.
///
/// Panics if the value is not representable; config validation keeps all
/// inputs finite so this never fires in practice.
pub fn cast<S: Scalar>(value: f64) -> S {
    S::from_f64(value).expect("finite f64 converts to scalar")
}

/// Floor applied inside every logarithm (loss and entropy terms).
pub const PROB_CLAMP: f64 = 1e-12;

/// Largest value the modified prediction entropy can take.
///
/// Stands in for the infinite entropy of a one-hot-incorrect prediction so
/// threshold comparisons stay total: `-ln(PROB_CLAMP)` (about 27.631).
pub fn entropy_saturation<S: Scalar>() -> S {
    -cast::<S>(PROB_CLAMP).ln()
}
