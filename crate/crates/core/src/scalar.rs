//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point types the library is generic over (f32, f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Machine epsilon scaled tolerance used by pivot and degeneracy checks.
    const TINY: Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    const TINY: Self = 1.0e-30;

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const TINY: Self = 1.0e-300;

    fn as_f64(self) -> f64 {
        self
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target type")
}

/// Converts an index or count into `T`.
#[inline]
pub fn cu<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in target type")
}
