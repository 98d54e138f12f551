//! Coefficient fields for the Gaussian algebra.
//!
//! Two modes are supported: exact rationals (`BigRational`) for identity
//! checks on grids with rational times, and `f64` for numerical pipelines.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Float coefficients below this magnitude are dropped on canonicalization.
pub const FLOAT_DROP_TOLERANCE: f64 = 1e-14;

/// Relative separation below which two float grid times count as equal.
pub const DEGENERATE_RELATIVE_GAP: f64 = 1e-14;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Whether a coefficient should be dropped from a canonical polynomial.
    fn is_negligible(&self) -> bool;

    /// Whether `lo < hi` by more than the degeneracy tolerance of the field.
    fn well_separated(lo: &Self, hi: &Self) -> bool;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self) -> bool {
        self.abs() < FLOAT_DROP_TOLERANCE
    }

    fn well_separated(lo: &Self, hi: &Self) -> bool {
        hi - lo > DEGENERATE_RELATIVE_GAP * hi.abs().max(lo.abs())
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn well_separated(lo: &Self, hi: &Self) -> bool {
        lo < hi
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Exact rational `num/den`.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
