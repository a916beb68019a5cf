//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Slack allowed when checking that a probability table sums to one.
    ///
    /// `1e-12` for `f64`; scaled by machine epsilon for narrower types.
    #[inline]
    fn mass_tol() -> Self {
        let scaled = Self::epsilon() * Self::lit(64.0);
        scaled.max(Self::lit(1e-12))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x * log2(x)` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlog2x<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}

/// Binary entropy `h2(p)` in bits.
#[inline]
pub fn binary_entropy<T: Real>(p: T) -> T {
    -(xlog2x(p) + xlog2x(T::one() - p))
}
