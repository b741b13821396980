//! The JSON envelope written by every CLI subcommand.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1.0.0";

/// The published JSON schema for [`Report`].
pub const SCHEMA: &str = include_str!("../../../report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    /// Wall-clock seconds; only filled in on request so that reports stay
    /// byte-identical across runs.
    pub timing: Option<f64>,
}

impl Report {
    pub fn new(command: &str, inputs: Value, results: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            results,
            warnings: Vec::new(),
            timing: None,
        }
    }

    /// Pretty-printed JSON with a trailing newline. Floats use the shortest
    /// representation that reads back to the same `f64`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values serialize");
        s.push('\n');
        s
    }
}
