//! CSV and JSON emission with a metadata header.

use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Format};

pub const TOOL: &str = "additive-tails";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines after the standard header.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

fn csv_header(cfg: &ExperimentConfig, command: &str) -> String {
    format!(
        "# {TOOL} {VERSION}\n# command: {command}\n# config-sha256: {}\n",
        cfg.hash()
    )
}

pub fn render_csv(cfg: &ExperimentConfig, command: &str, table: &Table) -> String {
    let mut s = csv_header(cfg, command);
    for (k, v) in &table.notes {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// JSON cannot carry comment lines; the same metadata sits under `meta`.
pub fn render_json<T: Serialize>(cfg: &ExperimentConfig, command: &str, report: &T) -> String {
    // out and threads do not affect results, same as the hash
    let echoed = ExperimentConfig {
        out: None,
        threads: None,
        ..cfg.clone()
    };
    let doc = json!({
        "meta": {
            "tool": TOOL,
            "version": VERSION,
            "command": command,
            "config_sha256": cfg.hash(),
            "config": echoed.to_kv(),
        },
        "report": report,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render<T: Serialize>(cfg: &ExperimentConfig, command: &str, table: &Table, report: &T) -> String {
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => render_csv(cfg, command, table),
        Format::Json => render_json(cfg, command, report),
    }
}
