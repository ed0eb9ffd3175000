//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for ratings, factors and controller memory: `f32` or `f64`.
///
/// The crate root re-exports `f64` aliases of every generic type; `f32` is
/// supported for memory-constrained runs but accumulates RMSE less accurately.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless widening to `f64` (exact for both `f32` and `f64`).
    fn to_f64_exact(self) -> f64 {
        self.to_f64().expect("float to f64 is infallible")
    }

    /// Rounding conversion from `f64`.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 to float is infallible")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64_lossy(v)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
