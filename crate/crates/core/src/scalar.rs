//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the library can run on (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + FftNum
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + FftNum
        + Debug
        + Display
        + LowerExp
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts an integer into `T`.
#[inline]
pub fn int<T: Real>(k: i64) -> T {
    T::from_i64(k).expect("integer representable in scalar type")
}

/// Complex number over `T` built from real and imaginary parts.
#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Real number lifted to the complex plane.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Integer power of a complex number, negative exponents included.
pub fn ipow<T: Real>(z: Complex<T>, e: i32) -> Complex<T> {
    if e >= 0 {
        z.powu(e as u32)
    } else {
        z.powu(e.unsigned_abs()).inv()
    }
}

/// Principal square root with the branch cut on the negative real axis.
///
/// Unlike `Complex::sqrt`, the value on the cut does not depend on the sign of a zero
/// imaginary part.
pub fn principal_sqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.im == T::zero() {
        if z.re >= T::zero() {
            return re(z.re.sqrt());
        }
        return cplx(T::zero(), (-z.re).sqrt());
    }
    z.sqrt()
}
