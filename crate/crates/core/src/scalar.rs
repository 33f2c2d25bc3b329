//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{ComplexField, DMatrix, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Display, LowerExp};

/// Real floating-point type the algorithms are written against.
///
/// Implemented for `f32` and `f64`. The tolerances used throughout the
/// crate assume `f64`; `f32` is supported for the algebraic layers.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    /// Absolute value (disambiguates between the numeric trait hierarchies).
    #[inline]
    fn mag(self) -> Self {
        <Self as ComplexField>::abs(self)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

/// Dense complex matrix over `T`.
pub type CMat<T> = DMatrix<Complex<T>>;

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn ci<T: Real>(im: T) -> C<T> {
    Complex::new(T::zero(), im)
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Operator norm used for coefficients: Euclidean for column vectors
/// (and scalars), induced 1-norm (max column sum) for matrices.
pub fn coeff_norm<T: Real>(m: &CMat<T>) -> T {
    if m.ncols() == 1 {
        let mut s = T::zero();
        for z in m.iter() {
            s += z.re * z.re + z.im * z.im;
        }
        s.sqrt()
    } else {
        let mut best = T::zero();
        for j in 0..m.ncols() {
            let mut s = T::zero();
            for i in 0..m.nrows() {
                s += cabs(m[(i, j)]);
            }
            if s > best {
                best = s;
            }
        }
        best
    }
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |a, z| {
        let v = cabs(*z);
        if v > a {
            v
        } else {
            a
        }
    })
}

/// Frobenius norm.
pub fn frob<T: Real>(m: &CMat<T>) -> T {
    m.iter()
        .fold(T::zero(), |a, z| a + z.re * z.re + z.im * z.im)
        .sqrt()
}

/// Elementwise complex conjugate.
pub fn conj<T: Real>(m: &CMat<T>) -> CMat<T> {
    m.map(|z| z.conj())
}

/// Symmetric part `(A + A^T)/2`.
pub fn sym<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.transpose()) * cr(T::lit(0.5))
}
