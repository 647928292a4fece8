//! Extended reals for divergence and exponent values.
//!
//! `+∞` is a first-class value here, never a large float: exponents that
//! genuinely diverge (below the zero-rate threshold, or when a constraint set
//! is empty) must stay distinguishable from large finite numbers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Error;

/// The textual token used for `+∞` in every file format.
pub const INF_TOKEN: &str = "inf";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `f64::INFINITY` to [`ExtReal::Infinite`]; NaN and `-∞` are rejected.
    pub fn from_f64(v: f64) -> Option<Self> {
        if v.is_nan() || v == f64::NEG_INFINITY {
            None
        } else if v == f64::INFINITY {
            Some(ExtReal::Infinite)
        } else {
            Some(ExtReal::Finite(v))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// Lossy view as a float, `+∞` becoming `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match *self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    /// Distance used by equality checks: both infinite agree (0), exactly one
    /// infinite disagrees (`+∞`).
    pub fn deviation(&self, other: &ExtReal) -> f64 {
        match (self, other) {
            (ExtReal::Infinite, ExtReal::Infinite) => 0.0,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v).expect("ExtReal from NaN or -inf")
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => {
                if let Some(p) = f.precision() {
                    write!(f, "{:.*}", p, v)
                } else {
                    write!(f, "{}", v)
                }
            }
            ExtReal::Infinite => f.write_str(INF_TOKEN),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == INF_TOKEN {
            return Ok(ExtReal::Infinite);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: `{t}`")))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!(
                "non-finite value `{t}` (use `{INF_TOKEN}`)"
            )));
        }
        Ok(ExtReal::Finite(v))
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            ExtReal::Finite(v) => serializer.serialize_f64(v),
            ExtReal::Infinite => serializer.serialize_str(INF_TOKEN),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a finite number or the string \"{INF_TOKEN}\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                ExtReal::from_f64(v).ok_or_else(|| E::custom("NaN or -inf"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}
