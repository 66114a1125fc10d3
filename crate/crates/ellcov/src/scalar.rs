use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Number field a matrix or sample batch lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Field {
    /// Real-valued data and matrices.
    Real,
    /// Complex-valued, circularly symmetric data (phase-invariant
    /// distributions, Hermitian covariance matrices).
    ComplexCircular,
}

/// Scalar type the generic estimators are written against: `f64` for the
/// real field and [`Complex64`] for the complex-circular field.
///
/// Everything downstream (matrices, estimators, detection statistics) is
/// generic over this trait, so the two fields share one implementation.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Which field this scalar represents.
    const FIELD: Field;

    fn zero() -> Self;
    fn one() -> Self;

    /// Embed a real number.
    fn from_re(x: f64) -> Self;

    /// Real part.
    fn re(self) -> f64;

    /// Imaginary part (zero for the real field).
    fn im(self) -> f64;

    /// Complex conjugate (identity for the real field).
    fn conj(self) -> Self;

    /// Squared modulus `|z|^2`.
    fn abs_sq(self) -> f64;

    /// Modulus `|z|`.
    fn abs(self) -> f64 {
        num_traits::Float::sqrt(self.abs_sq())
    }

    /// Multiply by a real factor.
    fn scale(self, c: f64) -> Self;

    /// Whether every component is finite.
    fn is_finite(self) -> bool;

    /// Draw one unit-variance, zero-mean Gaussian scalar: `N(0, 1)` for the
    /// real field, circular `CN(0, 1)` (i.e. `(g1 + i g2) / sqrt(2)` with
    /// independent standard normal `g1`, `g2`) for the complex field.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    #[inline]
    fn zero() -> Self {
        0.0
    }

    #[inline]
    fn one() -> Self {
        1.0
    }

    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }

    #[inline]
    fn re(self) -> f64 {
        self
    }

    #[inline]
    fn im(self) -> f64 {
        0.0
    }

    #[inline]
    fn conj(self) -> Self {
        self
    }

    #[inline]
    fn abs_sq(self) -> f64 {
        self * self
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::ComplexCircular;

    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    #[inline]
    fn re(self) -> f64 {
        self.re
    }

    #[inline]
    fn im(self) -> f64 {
        self.im
    }

    #[inline]
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }

    #[inline]
    fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        Complex64::new(self.re * c, self.im * c)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self.re) && f64::is_finite(self.im)
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        Complex64::new(
            g1 * core::f64::consts::FRAC_1_SQRT_2,
            g2 * core::f64::consts::FRAC_1_SQRT_2,
        )
    }
}
