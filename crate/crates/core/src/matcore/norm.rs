//! Schatten norms and the validated norm order.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::ComplexMatrix;
use super::spectral::svd;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are clamped to zero
/// before powering, so p < 2 norms of near-singular matrices stay stable.
const SINGULAR_CLAMP_RTOL: f64 = 1e-14;

/// A Schatten norm order p in [1, inf].
///
/// Infinity is an explicit tag, never a large float, so sigma^p cannot
/// overflow. Construct through [`NormOrder::new`] or [`NormOrder::infinity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    /// Validated finite order; requires p >= 1 (use `infinity()` for p = inf).
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidNormOrder(p));
        }
        Ok(NormOrder::Finite(p))
    }

    pub fn infinity() -> Self {
        NormOrder::Infinity
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NormOrder::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            NormOrder::Finite(p) => Some(*p),
            NormOrder::Infinity => None,
        }
    }

    /// The value as f64, with infinity mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            NormOrder::Finite(p) => *p,
            NormOrder::Infinity => f64::INFINITY,
        }
    }

    /// The derived order q = p/2; only defined for p >= 2.
    pub fn half(&self) -> Result<NormOrder> {
        match self {
            NormOrder::Infinity => Ok(NormOrder::Infinity),
            NormOrder::Finite(p) if *p >= 2.0 => Ok(NormOrder::Finite(p / 2.0)),
            NormOrder::Finite(p) => Err(Error::UnsupportedNormOrder {
                what: "q = p/2",
                requirement: ">= 2",
                p: *p,
            }),
        }
    }
}

impl std::fmt::Display for NormOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormOrder::Finite(p) => write!(f, "{p}"),
            NormOrder::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for NormOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "infinity" | "∞" => Ok(NormOrder::Infinity),
            other => {
                let p: f64 = other.parse().map_err(|_| Error::InvalidNormOrder(f64::NAN))?;
                NormOrder::new(p)
            }
        }
    }
}

// JSON form: a number, or the string "inf".
impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormOrder::Finite(p) => serializer.serialize_f64(*p),
            NormOrder::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::Number(n) => {
                NormOrder::new(n.as_f64().unwrap_or(f64::NAN)).map_err(D::Error::custom)
            }
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            _ => Err(D::Error::custom("norm order must be a number or \"inf\"")),
        }
    }
}

/// Schatten p-norm from precomputed singular values.
///
/// Factors out the largest value so large finite p cannot overflow.
pub fn schatten_from_singular_values(values: &[f64], p: NormOrder) -> f64 {
    let smax = values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    match p {
        NormOrder::Infinity => smax,
        NormOrder::Finite(p) => {
            let cut = SINGULAR_CLAMP_RTOL * smax;
            let sum: f64 = values
                .iter()
                .filter(|&&s| s > cut)
                .map(|&s| (s / smax).powf(p))
                .sum();
            smax * sum.powf(1.0 / p)
        }
    }
}

/// Schatten p-norm of an arbitrary rectangular matrix.
pub fn schatten_norm(m: &ComplexMatrix, p: NormOrder) -> Result<f64> {
    if let NormOrder::Finite(v) = p {
        if v < 1.0 {
            return Err(Error::InvalidNormOrder(v));
        }
    }
    let s = svd(m)?;
    Ok(schatten_from_singular_values(&s.values, p))
}
