//! Scalar abstraction: the numeric kernels are generic over the floating
//! type through [`Real`]; `f64` is the default used by the CLI and the
//! crate-root aliases.

use num_complex::Complex;

/// Floating-point scalar usable by every solver and kernel in this crate.
pub trait Real:
    nalgebra::RealField
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Copy
    + Default
    + std::iter::Sum<Self>
    + for<'a> std::iter::Sum<&'a Self>
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }
    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize not representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for `T::lit`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Complex number over the crate scalar.
pub type Cplx<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}
