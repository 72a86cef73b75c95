use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used for probabilities and log-probabilities.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant. Every `Float` can represent an `f64`
    /// approximately, so this never fails.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal")
    }

    /// Converts a count.
    fn count(value: usize) -> Self {
        Self::from_usize(value).expect("count fits in float")
    }

    /// Tolerance used when checking that probabilities sum to one.
    ///
    /// `1e-9` for `f64`; wider scalars keep `1e-9`, narrower ones fall back
    /// to a small multiple of their epsilon.
    fn sum_tolerance() -> Self {
        let eps = Self::epsilon() * Self::lit(64.0);
        let fixed = Self::lit(1e-9);
        if eps > fixed {
            eps
        } else {
            fixed
        }
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
}
