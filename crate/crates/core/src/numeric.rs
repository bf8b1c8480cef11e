//! The numeric grammar shared by table parsing, slot extraction and narration.
//!
//! Accepted forms: optional sign, digits with optional comma thousands
//! separators, optional fraction, optional trailing `%` (value divided by 100).

use std::sync::OnceLock;

use regex::Regex;
use rust_decimal::{Decimal, RoundingStrategy};

fn grammar() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^([+-])?((?:\d{1,3}(?:,\d{3})+)|\d+)(\.\d+)?(%)?$").expect("numeric grammar")
    })
}

/// Parses `text` under the numeric grammar. Surrounding whitespace is ignored.
pub fn parse_number(text: &str) -> Option<Decimal> {
    let caps = grammar().captures(text.trim())?;
    let mut digits = String::with_capacity(text.len());
    if caps.get(1).map(|m| m.as_str()) == Some("-") {
        digits.push('-');
    }
    digits.extend(caps[2].chars().filter(|c| *c != ','));
    if let Some(frac) = caps.get(3) {
        digits.push_str(frac.as_str());
    }
    let value: Decimal = digits.parse().ok()?;
    if caps.get(4).is_some() {
        value.checked_div(Decimal::ONE_HUNDRED)
    } else {
        Some(value)
    }
}

pub fn is_number(text: &str) -> bool {
    parse_number(text).is_some()
}

/// Renders a decimal for speech: rounded to 2 places, trailing zeros dropped.
pub fn format_spoken(value: Decimal) -> String {
    let rounded = value
        .round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero)
        .normalize();
    if rounded.is_zero() {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

/// Converts a decimal to a JSON number: integers stay integral, others go through f64.
pub fn to_json_number(value: Decimal) -> serde_json::Value {
    let v = value.normalize();
    if v.scale() == 0 {
        if let Ok(i) = i64::try_from(v) {
            return serde_json::Value::from(i);
        }
    }
    let f: f64 = v.to_string().parse().unwrap_or(f64::NAN);
    serde_json::Number::from_f64(f)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Inverse of [`to_json_number`] for numbers read back from the wire.
pub fn from_json_number(value: &serde_json::Number) -> Option<Decimal> {
    if let Some(i) = value.as_i64() {
        return Some(Decimal::from(i));
    }
    if let Some(u) = value.as_u64() {
        return Some(Decimal::from(u));
    }
    value.to_string().parse().ok().or_else(|| {
        value
            .as_f64()
            .and_then(|f| Decimal::from_str_exact(&f.to_string()).ok())
    })
}
