//! JSON run reports and two-column plot traces.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::rng::RngId;

pub const TOOL: &str = "ulse";

/// Envelope shared by every command: what ran, with which effective
/// configuration, on which input, and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective configuration with defaults resolved.
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngId>,
    /// SHA-256 of the input dataset's canonical CSV form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub results: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        config: impl Serialize,
        results: impl Serialize,
    ) -> serde_json::Result<Self> {
        Ok(Self {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            config: serde_json::to_value(config)?,
            rng: None,
            input_digest: None,
            results: serde_json::to_value(results)?,
            notes: Vec::new(),
        })
    }

    pub fn with_rng(mut self, id: RngId) -> Self {
        self.rng = Some(id);
        self
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.input_digest = Some(digest.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn to_json(&self) -> String {
        // A tree of `Value`s and plain fields cannot fail to serialise.
        serde_json::to_string_pretty(self).expect("report serialisation")
    }
}

/// Writes `header` then one `index,value` line per point.
pub fn write_trace<W: Write>(
    out: &mut W,
    header: (&str, &str),
    points: impl IntoIterator<Item = (f64, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "{},{}", header.0, header.1)?;
    for (a, b) in points {
        writeln!(out, "{a},{b}")?;
    }
    Ok(())
}
