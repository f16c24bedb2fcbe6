//! Machine-readable run records and number formatting for tables.
//!
//! Records serialize through a shortest-roundtrip float encoding, so a
//! reloaded record reproduces every real field bit for bit (well under
//! the 17-significant-digit contract).

use std::collections::BTreeMap;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Value,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            parameters: BTreeMap::new(),
            outputs: Value::Null,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_owned(), value.into());
        self
    }

    pub fn outputs(mut self, outputs: Value) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records always serialize")
    }
}

/// JSON value for a float that may be non-finite (JSON numbers cannot
/// hold infinities, which legitimately appear as ground-state betas).
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        v.into()
    } else {
        Value::String(v.to_string())
    }
}

/// Six significant digits for human-readable tables, plain decimal
/// notation within reading range.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-9..=9).contains(&magnitude) {
        return format!("{v:e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}
