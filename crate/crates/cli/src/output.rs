//! Result files: metadata blocks, JSON documents and CSV tables.

use std::fs;
use std::path::Path;

use repgap_core::io::format_f64;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{io_error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of the resolved configuration.
pub fn experiment_id(command: &str, cfg: &Config) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(cfg.resolved_text().as_bytes());
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Metadata shared by every JSON result: enough to rerun the experiment.
pub fn metadata(command: &str, cfg: &Config, hypotheses: Value) -> Value {
    let config: Map<String, Value> = cfg
        .resolved()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    json!({
        "command": command,
        "version": VERSION,
        "experiment_id": experiment_id(command, cfg),
        "config": config,
        "hypotheses": hypotheses,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_error(path))
}

pub fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_text(path, &json_text(value))
}

/// Writes the resolved configuration next to the results.
pub fn write_config(dir: &Path, cfg: &Config) -> Result<()> {
    write_text(&dir.join("config.txt"), &cfg.resolved_text())
}

/// Float cell with round-trip precision; empty for a missing value.
pub fn cell(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Minimal CSV table builder; cells never contain separators.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.text)
    }
}
