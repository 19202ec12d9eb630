//! Result-file plumbing: CSV series with a `#`-prefixed metadata header,
//! plus a JSON manifest per run. Files are written to a temporary in the
//! destination directory and atomically renamed, so partial outputs are
//! never left behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Toolkit version string embedded in every output.
pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// In-memory CSV assembly. All rows are formatted with `Display`, which for
/// `f64` is the shortest round-trip representation — deterministic for a
/// deterministic value.
pub struct Csv {
    metadata: Vec<(String, String)>,
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv { metadata: Vec::new(), header: columns.join(","), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{c}");
        }
        self.rows.push(line);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.header);
        for r in &self.rows {
            let _ = writeln!(out, "{r}");
        }
        out
    }
}

/// Writes `content` to `path` via a temporary file and atomic rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)?;
    Ok(())
}

/// Run manifest: what was run, with what inputs, and what came out.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub master_seed: u64,
    pub trials: usize,
    pub threads: Option<usize>,
    pub wall_time_ms: u128,
    pub outputs: Vec<String>,
    /// Echo of the fully parsed spec file.
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, &text)
    }
}
