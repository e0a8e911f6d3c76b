//! Table and report writers.  CSV floats use 17 significant digits so that
//! tables round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A CSV table held in memory until the command finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push_floats(&mut self, lead: &[String], values: &[f64]) {
        let mut row = lead.to_vec();
        row.extend(values.iter().map(|&v| fmt_float(v)));
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Column names `prefix1, …, prefixk`.
pub fn coords(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Everything a command produces.
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub report: serde_json::Value,
    pub pass: bool,
    /// Names of the checks that failed.
    pub failures: Vec<String>,
}

/// Writes tables and `<command>.json` into `dir`; returns the paths written.
pub fn write_artifacts(
    dir: &Path,
    command: &str,
    art: &Artifacts,
    csv: bool,
    json: bool,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if csv {
        for t in &art.tables {
            let p = dir.join(format!("{}.csv", t.name));
            t.write(&p)?;
            written.push(p);
        }
    }
    if json {
        let p = dir.join(format!("{command}.json"));
        let mut text = serde_json::to_string_pretty(&art.report)?;
        text.push('\n');
        fs::write(&p, text)?;
        written.push(p);
    }
    Ok(written)
}

/// Machine-readable failure record, printed as one JSON line on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl ErrorRecord {
    pub fn emit(&self) {
        eprintln!("{}", serde_json::to_string(self).expect("serialisable record"));
    }
}
