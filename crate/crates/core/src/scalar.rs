//! Scalar abstraction shared by every probability and cost container.
//!
//! Masses and costs are generic over [`Scalar`], which covers `f32`, `f64`
//! and exact [`Rational`] numbers. Exact arithmetic is what lets the model
//! conversions and the mixture LP be checked for equality rather than
//! closeness. Information functionals need logarithms and therefore take the
//! narrower [`Real`] bound (floating point only).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Field element used for masses, costs and LP coefficients.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Magnitude below which a pivot or reduced cost is treated as zero.
    /// Zero for exact types.
    fn tolerance() -> Self;

    /// Slack allowed when validating that masses sum to one.
    fn mass_tolerance() -> Self;

    /// Exact conversion from a finite `f64`; `None` for non-finite input.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn from_usize(n: usize) -> Self;

    /// Whether arithmetic on this type is exact.
    fn is_exact() -> bool {
        false
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// `|self| <= tolerance()`.
    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn sum<'a, I: IntoIterator<Item = &'a Self>>(it: I) -> Self {
        it.into_iter().fold(Self::zero(), |acc, v| acc + v.clone())
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }
    fn mass_tolerance() -> Self {
        1e-12
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-6
    }
    fn mass_tolerance() -> Self {
        1e-6
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v as f32)
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn from_usize(n: usize) -> Self {
        n as f32
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn mass_tolerance() -> Self {
        BigRational::zero()
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn is_exact() -> bool {
        true
    }
}

/// Floating-point scalar for entropy, divergence and exponential kernels.
pub trait Real: Scalar + Float {
    /// Marginal residual at which iterative fitting stops.
    fn fit_tolerance() -> Self;

    fn lit(v: f64) -> Self {
        <Self as Scalar>::from_f64(v).expect("finite literal")
    }
}

impl Real for f64 {
    fn fit_tolerance() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn fit_tolerance() -> Self {
        1e-5
    }
}

/// Build a rational `num/den` from machine integers.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
