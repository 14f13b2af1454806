//! Runtime values and final answers.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;

/// A value produced during interpretation.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(BigInt),
    Float(f64),
    Bool(bool),
    Str(String),
    Range {
        start: BigInt,
        stop: BigInt,
        step: BigInt,
    },
}

impl Value {
    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(i) => !i.is_zero(),
            Value::Float(f) => *f != 0.0,
            Value::Bool(b) => *b,
            Value::Str(s) => !s.is_empty(),
            Value::Range { start, stop, step } => {
                if step.is_positive() {
                    start < stop
                } else {
                    start > stop
                }
            }
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Str(_) => "str",
            Value::Range { .. } => "range",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{}", i),
            Value::Float(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e16 {
                    write!(f, "{:.1}", v)
                } else {
                    write!(f, "{}", v)
                }
            }
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Value::Str(s) => write!(f, "{}", s),
            Value::Range { start, stop, step } => write!(f, "range({}, {}, {})", start, stop, step),
        }
    }
}

/// The final answer of a program: integer, decimal, or text.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerValue {
    Int(BigInt),
    Dec(f64),
    Text(String),
}

impl AnswerValue {
    pub fn from_value(value: &Value) -> AnswerValue {
        match value {
            Value::Int(i) => AnswerValue::Int(i.clone()),
            Value::Float(f) => AnswerValue::Dec(*f),
            other => AnswerValue::Text(other.to_string()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnswerValue::Int(_) => "integer",
            AnswerValue::Dec(_) => "decimal",
            AnswerValue::Text(_) => "text",
        }
    }

    /// Numeric view, parsing numeric-looking text (commas and a leading `$`
    /// tolerated). Non-numeric text yields `None`.
    pub fn as_numeric(&self) -> Option<NumericView> {
        match self {
            AnswerValue::Int(i) => Some(NumericView::Int(i.clone())),
            AnswerValue::Dec(f) => Some(NumericView::Dec(*f)),
            AnswerValue::Text(s) => {
                let cleaned = s.trim().trim_start_matches('$').replace(',', "");
                if let Ok(i) = cleaned.parse::<BigInt>() {
                    return Some(NumericView::Int(i));
                }
                cleaned.parse::<f64>().ok().map(NumericView::Dec)
            }
        }
    }

    /// JSON rendering: numbers stay numbers where the wire format allows,
    /// oversized integers and non-finite decimals degrade to strings.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AnswerValue::Int(i) => match i.to_i64() {
                Some(v) => serde_json::Value::Number(v.into()),
                None => serde_json::Value::String(i.to_string()),
            },
            AnswerValue::Dec(f) => match serde_json::Number::from_f64(*f) {
                Some(n) => serde_json::Value::Number(n),
                None => serde_json::Value::String(f.to_string()),
            },
            AnswerValue::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::Int(i) => write!(f, "{}", i),
            AnswerValue::Dec(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e16 {
                    write!(f, "{:.1}", v)
                } else {
                    write!(f, "{}", v)
                }
            }
            AnswerValue::Text(s) => write!(f, "{}", s),
        }
    }
}

/// Numeric interpretation of an answer for grading.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericView {
    Int(BigInt),
    Dec(f64),
}

impl NumericView {
    pub fn as_f64(&self) -> f64 {
        match self {
            NumericView::Int(i) => i.to_f64().unwrap_or(f64::INFINITY),
            NumericView::Dec(f) => *f,
        }
    }

    pub fn abs(&self) -> NumericView {
        match self {
            NumericView::Int(i) => NumericView::Int(i.abs()),
            NumericView::Dec(f) => NumericView::Dec(f.abs()),
        }
    }

    /// Rounds half away from zero to the nearest integer.
    pub fn round_half_away(&self) -> Option<BigInt> {
        match self {
            NumericView::Int(i) => Some(i.clone()),
            NumericView::Dec(f) => {
                if !f.is_finite() || f.abs() >= 1e18 {
                    return None;
                }
                Some(BigInt::from(f.round() as i128))
            }
        }
    }
}
