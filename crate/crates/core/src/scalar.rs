//! Scalar abstraction for the affect engine.
//!
//! The flux dynamics only need field arithmetic and ordering, so the engine is
//! written once over [`Scalar`] and instantiated for `f32`, `f64` and an exact
//! rational type. The rational instantiation is what the property suite uses
//! when a claim must hold component-exactly rather than up to rounding.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

/// Exact rational scalar. With the default decay of 4/5 each idle turn adds a
/// factor of 5 to the denominator, so `i128` components overflow somewhere past
/// 45 turns; keep exact runs to session-sized sequences.
pub type Exact = Ratio<i128>;

pub trait Scalar: Copy + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// `num / den` in this scalar type. `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_count(n: u64) -> Self;

    /// Conversion from file values. `None` if the value cannot be represented.
    fn from_f64(value: f64) -> Option<Self>;

    fn to_f64(self) -> f64;

    fn is_finite(self) -> bool;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn from_f64(value: f64) -> Option<Self> {
        Some(value)
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn from_f64(value: f64) -> Option<Self> {
        let v = value as f32;
        (v.is_finite() || !value.is_finite()).then_some(v)
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl Scalar for Exact {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }

    fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        // Decimal literals in data files (0.8, 0.25, ...) recover their
        // intended fraction through continued-fraction approximation.
        Ratio::<i128>::approximate_float(value)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn is_finite(self) -> bool {
        true
    }
}
