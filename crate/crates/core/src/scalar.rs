//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All model, solver and estimator code is written against [`Scalar`], which
//! is implemented for `f32` and `f64`. Random draws are always produced in
//! `f64` and narrowed at the boundary so that a given seed yields the same
//! stream regardless of the working precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the working precision.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::c(0.5)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the working precision.
    #[inline]
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand used inside generic code: `c::<S>(0.5)`.
#[inline]
pub fn c<S: Scalar>(x: f64) -> S {
    S::c(x)
}
