//! Rendering of run artifacts as CSV or JSON with an embedded metadata block.

use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Explicit choice, else the output file extension, else CSV.
    pub fn resolve(explicit: Option<Format>, out: Option<&Path>) -> Format {
        explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        })
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// What a subcommand produced: a table for CSV, a structured payload for
/// JSON, and optional side artifacts requested by flag.
#[derive(Debug, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Scalar results written as `# key=value` lines in CSV.
    pub notes: Vec<(String, String)>,
    pub data: Value,
    pub warnings: Vec<String>,
    pub plan: Option<Value>,
    pub heatmap: Option<String>,
}

impl Report {
    pub fn new(columns: &[&str], data: Value) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), data, ..Self::default() }
    }

    pub fn note(mut self, key: &str, value: String) -> Self {
        self.notes.push((key.to_string(), value));
        self
    }

    pub fn warn(&mut self, warning: Option<String>) {
        self.warnings.extend(warning);
    }
}

pub fn render(config: &RunConfig, report: &Report, format: Format) -> Result<String> {
    let config_json = serde_json::to_value(config).context("serializing run config")?;
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# tool=wq {}\n", env!("CARGO_PKG_VERSION")));
            out.push_str(&format!("# command={}\n", config.command.name()));
            out.push_str(&format!("# seed={}\n", config.seed));
            out.push_str(&format!("# config={config_json}\n"));
            for w in &report.warnings {
                out.push_str(&format!("# warning={w}\n"));
            }
            for (k, v) in &report.notes {
                out.push_str(&format!("# {k}={v}\n"));
            }
            if !report.columns.is_empty() {
                out.push_str(&report.columns.join(","));
                out.push('\n');
            }
            for row in &report.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            Ok(out)
        }
        Format::Json => {
            let mut meta = json!({
                "tool": "wq",
                "version": env!("CARGO_PKG_VERSION"),
                "command": config.command.name(),
                "seed": config.seed,
                "config": config_json,
            });
            if !report.warnings.is_empty() {
                meta["warnings"] = json!(report.warnings);
            }
            let doc = json!({ "meta": meta, "data": report.data });
            let mut out = serde_json::to_string_pretty(&doc)?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// The run config embedded in a previously written artifact.
pub fn extract_config(text: &str) -> Result<(RunConfig, Format)> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).context("artifact is not valid JSON")?;
        let config = doc.get("meta").and_then(|m| m.get("config")).context("JSON artifact has no meta.config block")?;
        return Ok((serde_json::from_value(config.clone()).context("malformed config block")?, Format::Json));
    }
    let line = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config="))
        .context("CSV artifact has no '# config=' line")?;
    Ok((serde_json::from_str(line).context("malformed config line")?, Format::Csv))
}
