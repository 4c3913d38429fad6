//! The shared JSON report: `{tool, version, inputs, checks: [{name, value, bound, pass}]}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const TOOL: &str = "swirl5d";
/// Schema version written into every report.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `None` for report-only measurements.
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: Some(bound), pass: value <= bound }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: Some(bound), pass: value >= bound }
    }

    pub fn report_only(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, bound: None, pass: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub inputs: Value,
    pub checks: Vec<Check>,
    /// Command-specific payload.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub results: Value,
}

impl Report {
    pub fn new(inputs: Value) -> Self {
        Self { tool: TOOL.into(), version: SCHEMA_VERSION.into(), inputs, checks: Vec::new(), results: Value::Null }
    }

    pub fn with_results(mut self, results: Value) -> Self {
        self.results = results;
        self
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a report, rejecting other tools and schema versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        validate(&value)?;
        Ok(serde_json::from_value(value)?)
    }
}

/// Structural validation against the shared schema.
pub fn validate(v: &Value) -> Result<()> {
    let obj = v.as_object().ok_or_else(|| Error::Schema("report is not a JSON object".into()))?;
    match obj.get("tool").and_then(Value::as_str) {
        Some(TOOL) => {}
        other => return Err(Error::Schema(format!("unexpected tool {other:?}"))),
    }
    match obj.get("version").and_then(Value::as_str) {
        Some(SCHEMA_VERSION) => {}
        other => return Err(Error::Schema(format!("schema version {other:?}, expected {SCHEMA_VERSION}"))),
    }
    if !obj.contains_key("inputs") {
        return Err(Error::Schema("missing inputs".into()));
    }
    let checks = obj
        .get("checks")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema("checks must be an array".into()))?;
    for c in checks {
        let ok = c.get("name").is_some_and(Value::is_string)
            && c.get("value").is_some_and(Value::is_number)
            && c.get("bound").is_some_and(|b| b.is_number() || b.is_null())
            && c.get("pass").is_some_and(Value::is_boolean);
        if !ok {
            return Err(Error::Schema(format!("malformed check {c}")));
        }
    }
    Ok(())
}
