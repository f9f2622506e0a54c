//! Scalar abstraction: the solver is generic over the real base type.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the whole solver is parametrized over (`f32`, `f64`).
pub trait Scalar:
    RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync + 'static
{
}

/// Convert an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal not representable in scalar type")
}

/// Complex number over the working scalar type.
pub type C<T> = Complex<T>;

/// Complex value from `f64` parts.
#[inline]
pub fn cplx<T: Scalar>(re: f64, im: f64) -> C<T> {
    Complex::new(real(re), real(im))
}
