use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SmmsError};

/// The dimensional parameter `m` of a smooth metric measure space.
///
/// Only `m >= 0` is supported; `Infinite` is represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimParam {
    Finite(f64),
    Infinite,
}

impl DimParam {
    pub fn finite(m: f64) -> Result<Self> {
        if m.is_finite() && m >= 0.0 {
            Ok(DimParam::Finite(m))
        } else {
            Err(SmmsError::InvalidParameter(format!("m must be finite and >= 0, got {m}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DimParam::Infinite)
    }

    /// The finite value, or an error naming the operation that needs it.
    pub fn require_finite(&self, what: &str) -> Result<f64> {
        match *self {
            DimParam::Finite(m) => Ok(m),
            DimParam::Infinite => Err(SmmsError::InvalidParameter(format!("{what} requires finite m"))),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            DimParam::Finite(m) => m,
            DimParam::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for DimParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimParam::Finite(m) => write!(f, "{m}"),
            DimParam::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for DimParam {
    type Err = SmmsError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(DimParam::Infinite);
        }
        let m: f64 = t
            .parse()
            .map_err(|_| SmmsError::InvalidParameter(format!("cannot parse m from {s:?}")))?;
        DimParam::finite(m)
    }
}

impl Serialize for DimParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DimParam::Finite(m) => s.serialize_f64(*m),
            DimParam::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for DimParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(m) => DimParam::finite(m),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inf_and_numbers() {
        assert_eq!("inf".parse::<DimParam>().unwrap(), DimParam::Infinite);
        assert_eq!("2.5".parse::<DimParam>().unwrap(), DimParam::Finite(2.5));
        assert!("-1".parse::<DimParam>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let v: Vec<DimParam> = serde_json::from_str(r#"[3, "inf", 0.5]"#).unwrap();
        assert_eq!(v, vec![DimParam::Finite(3.0), DimParam::Infinite, DimParam::Finite(0.5)]);
        assert_eq!(serde_json::to_string(&DimParam::Infinite).unwrap(), "\"inf\"");
    }
}
