//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar the simulator is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// A tolerance no tighter than what the type can resolve: `max(base, 256·eps)`.
    #[inline]
    fn tol(base: f64) -> Self {
        Self::lit(base).max(Self::epsilon() * Self::lit(256.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}
