//! Datetime truncation. Units without a year component are projected onto a
//! fixed base year (2012, whose January 1st is a Sunday) as Vega does.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};

use crate::spec::TimeUnit;
use crate::value::{datetime_from_epoch_seconds, parse_datetime, Value};

const BASE_YEAR: i32 = 2012;

fn ymd(y: i32, m: u32, d: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid calendar date")
}

/// Sundays in (Jan 1 00:00, d] of d's year, capped at 52 so the result stays
/// inside the base year and truncation remains idempotent.
fn sunday_week(d: &NaiveDateTime) -> i64 {
    let jan1 = ymd(d.year(), 1, 1).date();
    let days = (d.date() - jan1).num_days();
    // Offset from Jan 1 to the first Sunday strictly after it.
    let first = (7 - jan1.weekday().num_days_from_sunday() as i64) % 7;
    let first = if first == 0 { 7 } else { first };
    let count = if days < first {
        0
    } else {
        (days - first) / 7 + 1
    };
    count.min(52)
}

pub fn truncate(dt: &NaiveDateTime, unit: TimeUnit) -> NaiveDateTime {
    match unit {
        TimeUnit::Year => ymd(dt.year(), 1, 1),
        TimeUnit::YearMonth => ymd(dt.year(), dt.month(), 1),
        TimeUnit::Month => ymd(BASE_YEAR, dt.month(), 1),
        TimeUnit::Date => ymd(BASE_YEAR, 1, dt.day()),
        TimeUnit::Day => ymd(BASE_YEAR, 1, 1 + dt.weekday().num_days_from_sunday()),
        TimeUnit::Hours => ymd(BASE_YEAR, 1, 1) + Duration::hours(dt.hour() as i64),
        TimeUnit::Week => ymd(BASE_YEAR, 1, 1) + Duration::days(7 * sunday_week(dt)),
    }
}

/// Datetimes directly, text via the datetime parser, numbers as epoch seconds.
/// Anything else becomes null.
pub fn truncate_value(v: &Value, unit: TimeUnit) -> Value {
    let dt = match v {
        Value::DateTime(dt) => Some(*dt),
        Value::Text(s) => parse_datetime(s),
        Value::Int(i) => datetime_from_epoch_seconds(*i as f64),
        Value::Real(r) => datetime_from_epoch_seconds(*r),
        Value::Null => None,
    };
    dt.map(|d| Value::DateTime(truncate(&d, unit)))
        .unwrap_or(Value::Null)
}
