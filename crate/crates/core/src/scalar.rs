//! Numeric traits the learners and the MLP are written against.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ordered ring arithmetic. Enough for exhaustive split search, and exact
/// when instantiated with rationals.
pub trait OrderedWeight: Num + Copy + PartialOrd + Debug {}

impl<T: Num + Copy + PartialOrd + Debug> OrderedWeight for T {}
