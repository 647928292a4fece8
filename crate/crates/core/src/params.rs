use serde::Serialize;

use crate::error::{Error, Result};

/// Tilt parameter `δ ∈ [-1, +∞)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct DeltaParam(f64);

impl DeltaParam {
    pub const ZERO: DeltaParam = DeltaParam(0.0);
    pub const MINUS_ONE: DeltaParam = DeltaParam(-1.0);

    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta >= -1.0 {
            Ok(DeltaParam(delta))
        } else {
            Err(Error::Validation(format!("delta {delta} is not in [-1, +inf)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn require_converse_side(self) -> Result<f64> {
        if self.0 <= 0.0 {
            Ok(self.0)
        } else {
            Err(Error::Validation(format!("delta {} must lie in [-1, 0]", self.0)))
        }
    }

    pub(crate) fn require_error_side(self) -> Result<f64> {
        if self.0 >= 0.0 {
            Ok(self.0)
        } else {
            Err(Error::Validation(format!("delta {} must be nonnegative", self.0)))
        }
    }
}

/// Transmission rate in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct RatePoint(f64);

impl RatePoint {
    pub const ZERO: RatePoint = RatePoint(0.0);

    pub fn new(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate >= 0.0 {
            Ok(RatePoint(rate))
        } else {
            Err(Error::Validation(format!("rate {rate} is not a finite nonnegative number")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert!(DeltaParam::new(-1.0).is_ok());
        assert!(DeltaParam::new(-1.0000001).is_err());
        assert!(DeltaParam::new(f64::NAN).is_err());
        assert!(DeltaParam::new(0.5).unwrap().require_converse_side().is_err());
        assert!(RatePoint::new(-0.1).is_err());
        assert!(RatePoint::new(f64::INFINITY).is_err());
    }
}
