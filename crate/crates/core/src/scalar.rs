//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or intermediate into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Formats a scalar for CSV output: `inf`, `-inf` and `nan` for the special
/// values, otherwise the shortest representation that parses back exactly.
pub fn format_real<T: Real>(x: T) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > T::zero() { "inf" } else { "-inf" }.to_string()
    } else {
        x.to_string()
    }
}

/// Inverse of [`format_real`]; also accepts any spelling `str::parse` does.
pub fn parse_real<T: Real>(s: &str) -> Option<T> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(T::infinity()),
        "-inf" | "-Infinity" => Some(T::neg_infinity()),
        "nan" | "NaN" => Some(T::nan()),
        other => other.parse::<T>().ok(),
    }
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let total: T = xs.iter().copied().sum();
    Some(total / T::from_count(xs.len()))
}
