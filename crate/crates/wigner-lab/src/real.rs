//! Scalar abstraction for the numerical core.
//!
//! Everything spectral is written against [`Real`] so the same code runs at
//! `f32` or `f64`; the crate root exports concrete `f64` aliases which the
//! harness and CLI use exclusively.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar usable by the spectral core.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    #[inline]
    fn pi() -> Self {
        Self::of(std::f64::consts::PI)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    /// Round-trip to `f64` (lossless for `f64`, widening for `f32`).
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<R> = Complex<R>;

#[inline]
pub fn c_from<R: Real>(re: f64, im: f64) -> C<R> {
    Complex::new(R::of(re), R::of(im))
}
