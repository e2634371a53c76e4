//! Scalar abstraction shared by the closed-form analysis and the luminance
//! pipeline.
//!
//! Formula code is written once against [`Scalar`] and evaluated either in
//! floating point or exactly over rationals ([`Exact`]). Row luminance in
//! the camera model and receiver uses [`Sample`], the floating-point subset.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar used where results must be reproducible bit-for-bit.
pub type Exact = Ratio<i64>;

pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync {
    /// `num / den` in this scalar type. `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for Ratio<i128> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Floating-point sample type for luminance traces.
pub trait Sample: Scalar + Float + FromPrimitive + 'static {}

impl<T> Sample for T where T: Scalar + Float + FromPrimitive + 'static {}

/// Convert an `f64` into a [`Sample`]; total for the float types we implement.
#[inline]
pub fn sample<T: Sample>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(T::nan)
}
