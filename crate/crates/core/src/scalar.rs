//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when validating unitarity and symplectic structure of
    /// user-supplied matrices.
    fn validation_tol() -> Self;
}

impl Real for f64 {
    fn validation_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn validation_tol() -> Self {
        2e-5
    }
}

/// Complex scalar over a [`Real`].
pub type Cx<T> = Complex<T>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

/// Unit-modulus complex number `e^{i phi}`.
#[inline]
pub fn phase<T: Real>(phi: T) -> Cx<T> {
    Complex::from_polar(T::one(), phi)
}

/// `n!` as a real number (exact for the photon numbers used here).
pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * from_usize::<T>(k))
}
