//! Pixel scalar abstraction over `f64` and `Complex64`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field element used for pixels, gradients and Haar coefficients.
///
/// Real images are the default; complex images are supported because
/// Fourier measurements live in ℂ.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const IS_COMPLEX: bool;

    fn zero() -> Self {
        Self::default()
    }
    fn from_f64(v: f64) -> Self;
    fn abs(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn conj(self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn is_finite(self) -> bool;
    fn to_complex(self) -> Complex64;
    /// Maps back from ℂ. For real scalars this keeps the real part, which is
    /// the orthogonal projection onto the real subspace.
    fn from_complex(c: Complex64) -> Self;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn conj(self) -> Self {
        self
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
}
