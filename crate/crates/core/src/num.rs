//! Scalar abstraction for ratio-valued metrics.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// A field-like scalar that can represent ratios of integer counts.
///
/// Implemented for `f32`, `f64` and `Ratio<i64>`. Every metric in this crate
/// is a quotient of integer counts or areas, so `from_ratio` is the only
/// constructor needed besides `zero`/`one`.
pub trait Scalar: Num + Copy + PartialOrd + Debug + ToPrimitive {
    fn from_i64(value: i64) -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::from_i64(numer) / Self::from_i64(denom)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn from_i64(value: i64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    fn from_i64(value: i64) -> Self {
        value as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_i64(value: i64) -> Self {
        Ratio::from_integer(value)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(numer, denom)
    }
}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn harmonic_mean<S: Scalar>(precision: S, recall: S) -> S {
    let sum = precision + recall;
    if sum == S::zero() {
        S::zero()
    } else {
        let two = S::one() + S::one();
        two * precision * recall / sum
    }
}

/// `numer / denom`, with `0/0` defined as zero.
pub fn ratio_or_zero<S: Scalar>(numer: usize, denom: usize) -> S {
    if denom == 0 {
        S::zero()
    } else {
        S::from_ratio(numer as i64, denom as i64)
    }
}
