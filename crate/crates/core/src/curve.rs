//! Shared evaluation interface for limit curves.

use serde::Serialize;

use crate::error::Result;
use crate::geometry::Point2;
use crate::scalar::{serde_rational, Rational};

/// A point of an approximating chain together with a certified bound on its
/// squared distance to the limit curve at the same parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurvePoint {
    pub point: Point2,
    #[serde(with = "serde_rational")]
    pub error_radius_sq: Rational,
}

impl CurvePoint {
    pub fn is_exact(&self) -> bool {
        num_traits::Zero::is_zero(&self.error_radius_sq)
    }
}

/// Anything that can be evaluated on `[0, 1]` with a certified error radius.
pub trait CurveEvaluator {
    fn eval(&self, t: &Rational) -> Result<CurvePoint>;
}

/// Exact rational interval `[lo, hi]` known to contain a quantity whose value
/// depends on an infinite construction tail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Enclosure {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
}

impl Enclosure {
    pub fn exact(value: Rational) -> Self {
        Enclosure {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// The value when the enclosure has collapsed to a point.
    pub fn value(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn scale(&self, factor: &Rational) -> Enclosure {
        debug_assert!(!num_traits::Signed::is_negative(factor));
        Enclosure {
            lo: &self.lo * factor,
            hi: &self.hi * factor,
        }
    }
}
