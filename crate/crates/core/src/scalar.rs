use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar used by the statistics code: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static {
    /// Convergence tolerance for iterative special functions at this precision.
    fn series_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize is representable as a float")
    }

    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal is representable")
    }
}

impl Scalar for f32 {
    fn series_tolerance() -> Self {
        4.0 * f32::EPSILON
    }
}

impl Scalar for f64 {
    fn series_tolerance() -> Self {
        1e-12
    }
}
