use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the numeric core is generic over: `f32` or `f64`.
///
/// Conversions go through num-traits; arithmetic and elementary functions
/// come from nalgebra's `RealField`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    const MACHINE_EPSILON: Self;

    /// Converts an `f64` literal or computed constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("Scalar widens to f64")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to Scalar")
    }
}

impl Scalar for f64 {
    const MACHINE_EPSILON: Self = f64::EPSILON;
}

impl Scalar for f32 {
    const MACHINE_EPSILON: Self = f32::EPSILON;
}
