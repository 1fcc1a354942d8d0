//! Typed scalar values carried by live variables and wire messages.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::ValueError;

/// Type name of a directory entry as it appears on the wire.
///
/// `Trigger` never appears as the kind of a [`LiveValue`]; it only tags
/// directory entries that point at a one-shot trigger listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Int,
    Float,
    Bool,
    String,
    Trigger,
}

impl ValueType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Int => "int",
            ValueType::Float => "float",
            ValueType::Bool => "bool",
            ValueType::String => "string",
            ValueType::Trigger => "trigger",
        }
    }

    /// Parses a raw command-line string according to this type.
    ///
    /// int takes a decimal integer, float takes decimal or scientific
    /// notation, bool takes exactly `true`/`false`, string is verbatim.
    /// Triggers accept the same spellings as bool.
    pub fn parse_raw(self, raw: &str) -> Result<LiveValue, ValueError> {
        match self {
            ValueType::Int => raw
                .parse::<i64>()
                .map(LiveValue::Int)
                .map_err(|_| ValueError::TypeMismatch {
                    expected: self,
                    found: raw.to_string(),
                }),
            ValueType::Float => {
                let v = raw.parse::<f64>().map_err(|_| ValueError::TypeMismatch {
                    expected: self,
                    found: raw.to_string(),
                })?;
                LiveValue::float(v)
            }
            ValueType::Bool | ValueType::Trigger => match raw {
                "true" => Ok(LiveValue::Bool(true)),
                "false" => Ok(LiveValue::Bool(false)),
                _ => Err(ValueError::TypeMismatch {
                    expected: self,
                    found: raw.to_string(),
                }),
            },
            ValueType::String => Ok(LiveValue::Str(raw.to_string())),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueType {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" => Ok(ValueType::Int),
            "float" => Ok(ValueType::Float),
            "bool" => Ok(ValueType::Bool),
            "string" => Ok(ValueType::String),
            "trigger" => Ok(ValueType::Trigger),
            other => Err(ValueError::UnknownType(other.to_string())),
        }
    }
}

/// A runtime scalar. Float payloads are always finite.
#[derive(Debug, Clone, PartialEq)]
pub enum LiveValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl LiveValue {
    /// Builds a float value, rejecting NaN and infinities.
    pub fn float(v: f64) -> Result<Self, ValueError> {
        if v.is_finite() {
            Ok(LiveValue::Float(v))
        } else {
            Err(ValueError::NonFinite)
        }
    }

    pub fn kind(&self) -> ValueType {
        match self {
            LiveValue::Int(_) => ValueType::Int,
            LiveValue::Float(_) => ValueType::Float,
            LiveValue::Bool(_) => ValueType::Bool,
            LiveValue::Str(_) => ValueType::String,
        }
    }

    pub fn validate(&self) -> Result<(), ValueError> {
        match self {
            LiveValue::Float(v) if !v.is_finite() => Err(ValueError::NonFinite),
            _ => Ok(()),
        }
    }

    /// Converts `self` so it can be stored in a variable of kind `target`.
    ///
    /// Only integer to float widening is allowed; every other cross-kind
    /// conversion is a mismatch.
    pub fn coerce_to(self, target: ValueType) -> Result<LiveValue, ValueError> {
        self.validate()?;
        match (self, target) {
            (v, t) if v.kind() == t => Ok(v),
            (LiveValue::Int(i), ValueType::Float) => Ok(LiveValue::Float(i as f64)),
            (v, t) => Err(ValueError::TypeMismatch {
                expected: t,
                found: v.to_string(),
            }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            LiveValue::Float(v) => Some(v),
            LiveValue::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            LiveValue::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            LiveValue::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            LiveValue::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Converts a JSON scalar. Integers that fit in i64 become `Int`,
    /// any other number becomes `Float`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, ValueError> {
        match value {
            serde_json::Value::Bool(b) => Ok(LiveValue::Bool(*b)),
            serde_json::Value::String(s) => Ok(LiveValue::Str(s.clone())),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(LiveValue::Int(i))
                } else if n.is_u64() {
                    Err(ValueError::OutOfRange(n.to_string()))
                } else {
                    LiveValue::float(n.as_f64().ok_or(ValueError::NonFinite)?)
                }
            }
            other => Err(ValueError::NotScalar(other.to_string())),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            LiveValue::Int(i) => serde_json::Value::from(*i),
            LiveValue::Float(v) => serde_json::Value::from(*v),
            LiveValue::Bool(b) => serde_json::Value::Bool(*b),
            LiveValue::Str(s) => serde_json::Value::String(s.clone()),
        }
    }
}

impl fmt::Display for LiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiveValue::Int(i) => write!(f, "{i}"),
            LiveValue::Float(v) => write!(f, "{v:?}"),
            LiveValue::Bool(b) => write!(f, "{b}"),
            LiveValue::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for LiveValue {
    fn from(v: i64) -> Self {
        LiveValue::Int(v)
    }
}

impl From<bool> for LiveValue {
    fn from(v: bool) -> Self {
        LiveValue::Bool(v)
    }
}

impl From<&str> for LiveValue {
    fn from(v: &str) -> Self {
        LiveValue::Str(v.to_string())
    }
}

impl From<String> for LiveValue {
    fn from(v: String) -> Self {
        LiveValue::Str(v)
    }
}

impl Serialize for LiveValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            LiveValue::Int(i) => serializer.serialize_i64(*i),
            LiveValue::Float(v) => serializer.serialize_f64(*v),
            LiveValue::Bool(b) => serializer.serialize_bool(*b),
            LiveValue::Str(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for LiveValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScalarVisitor;

        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = LiveValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON scalar (integer, float, bool or string)")
            }

            fn visit_bool<E: de::Error>(self, v: bool) -> Result<LiveValue, E> {
                Ok(LiveValue::Bool(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<LiveValue, E> {
                Ok(LiveValue::Int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<LiveValue, E> {
                i64::try_from(v)
                    .map(LiveValue::Int)
                    .map_err(|_| E::custom(format!("integer {v} out of range")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<LiveValue, E> {
                LiveValue::float(v).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<LiveValue, E> {
                Ok(LiveValue::Str(v.to_string()))
            }

            fn visit_string<E: de::Error>(self, v: String) -> Result<LiveValue, E> {
                Ok(LiveValue::Str(v))
            }
        }

        deserializer.deserialize_any(ScalarVisitor)
    }
}
