//! Cell values shared by tables, transform evaluation and tuple comparison.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

/// Kind of a table column or tuple field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Integer,
    Real,
    Datetime,
}

/// A single cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    DateTime(NaiveDateTime),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ValueKind::Integer),
            Value::Real(_) => Some(ValueKind::Real),
            Value::Text(_) => Some(ValueKind::Text),
            Value::DateTime(_) => Some(ValueKind::Datetime),
        }
    }

    /// Numeric view: integers and reals directly, text when it parses as a number.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Text(s) => parse_number(s),
            _ => None,
        }
    }

    /// Parse one CSV cell. Empty cells are null.
    pub fn parse_cell(raw: &str, kind: ValueKind) -> Value {
        let s = raw.trim();
        if s.is_empty() {
            return Value::Null;
        }
        match kind {
            ValueKind::Integer => s.parse().map(Value::Int).unwrap_or(Value::Null),
            ValueKind::Real => parse_number(s).map(Value::Real).unwrap_or(Value::Null),
            ValueKind::Datetime => parse_datetime(s)
                .map(Value::DateTime)
                .unwrap_or(Value::Null),
            ValueKind::Text => Value::Text(raw.to_string()),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Value {
        match v {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Int(*b as i64),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => n.as_f64().map(Value::Real).unwrap_or(Value::Null),
            },
            serde_json::Value::String(s) => Value::Text(s.clone()),
            other => Value::Text(other.to_string()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::DateTime(_) => serde_json::Value::String(self.to_string()),
        }
    }

    /// Total order used for grouping keys and deterministic output:
    /// null < numbers < datetimes < text.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Int(_) | Value::Real(_) => 1,
                Value::DateTime(_) => 2,
                Value::Text(_) => 3,
            }
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
                let a = self.as_number().unwrap_or(0.0);
                let b = other.as_number().unwrap_or(0.0);
                a.total_cmp(&b)
            }
            (Value::DateTime(a), Value::DateTime(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Exact equality for grouping: `Int(1)` and `Real(1.0)` fall in the same group.
    pub fn group_eq(&self, other: &Value) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{}", format_number(*r)),
            Value::Text(s) => f.write_str(s),
            Value::DateTime(dt) => {
                if dt.time() == NaiveTime::MIN {
                    write!(f, "{}", dt.format("%Y-%m-%d"))
                } else {
                    write!(f, "{}", dt.format("%Y-%m-%d %H:%M:%S"))
                }
            }
        }
    }
}

/// Shortest round-trip formatting with float noise below 1e-12 removed.
pub fn format_number(x: f64) -> String {
    let rounded = (x * 1e12).round() / 1e12;
    let v = if rounded.is_finite() && (rounded - x).abs() <= 1e-12 * x.abs().max(1.0) {
        rounded
    } else {
        x
    };
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    // Reject "nan", "inf" and friends that f64::from_str accepts.
    if !s
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
    {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Accepts ISO-8601 dates and datetimes (with optional offset) and `YYYY-MM-DD HH:MM[:SS]`.
pub fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if s.len() < 10 || !s.as_bytes()[0].is_ascii_digit() {
        return None;
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    for fmt in [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|dt| dt.naive_utc())
}

/// Interpret a number as epoch seconds.
pub fn datetime_from_epoch_seconds(secs: f64) -> Option<NaiveDateTime> {
    let whole = secs.floor();
    let nanos = ((secs - whole) * 1e9).round() as u32;
    DateTime::from_timestamp(whole as i64, nanos.min(999_999_999)).map(|dt| dt.naive_utc())
}

pub fn epoch_millis(dt: &NaiveDateTime) -> f64 {
    dt.and_utc().timestamp_millis() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_supported_datetime_forms() {
        assert!(parse_datetime("2018-03-17").is_some());
        assert!(parse_datetime("2018-03-17 16:48:42").is_some());
        assert!(parse_datetime("2018-03-17T16:48:42Z").is_some());
        assert!(parse_datetime("2018-03-17T16:48:42+02:00").is_some());
        assert!(parse_datetime("17/03/2018").is_none());
        assert!(parse_datetime("2018").is_none());
    }

    #[test]
    fn rejects_non_numeric_floats() {
        assert_eq!(parse_number("nan"), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number(" 12.5 "), Some(12.5));
        assert_eq!(parse_number("-3e2"), Some(-300.0));
    }

    #[test]
    fn display_trims_float_noise() {
        assert_eq!(Value::Real(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(Value::Real(3.0).to_string(), "3");
        assert_eq!(Value::Real(-0.0).to_string(), "0");
    }

    #[test]
    fn mixed_numeric_grouping() {
        assert!(Value::Int(1).group_eq(&Value::Real(1.0)));
        assert!(!Value::Int(1).group_eq(&Value::Text("1".into())));
    }
}
