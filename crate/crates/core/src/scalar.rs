//! Scalar abstraction for the real-valued stages (transforms, filters, metrics).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the transform, filter and metric code.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every constant in this crate is representable.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Round half away from zero, then clamp into the 8-bit sample range.
pub fn quantize_sample<T: Real>(v: T) -> u8 {
    let r = v.round();
    if r.is_nan() || r <= T::zero() {
        0
    } else if r >= T::of(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(255)
    }
}
