//! Tabular output and run manifests.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits.
            Self::Num(x) => format!("{x:.16e}"),
            Self::Int(n) => n.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) => json!(x),
            Self::Int(n) => json!(n),
            Self::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Self::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let mut s = serde_json::to_string_pretty(&json!({ "columns": self.columns, "rows": rows }))
                    .expect("table serialises");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Writes `contents` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Collects output files for the manifest.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, contents: &str) -> io::Result<()> {
        write_atomic(path, contents.as_bytes())?;
        self.files.push(OutputFile {
            path: path.display().to_string(),
            bytes: contents.len() as u64,
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".manifest.json");
    PathBuf::from(p)
}

/// `dir/stem.<suffix>.<ext>` next to the main output.
pub fn sibling(out: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}.{}", format.extension()))
}

pub struct ManifestInput<'a> {
    pub command: &'a str,
    pub preset: Option<&'a str>,
    pub config: &'a crate::config::RunConfig,
    pub threads: usize,
    pub seconds: f64,
    pub derived: Map<String, Value>,
    pub outputs: &'a [OutputFile],
}

pub fn write_manifest(out: &Path, m: ManifestInput<'_>) -> io::Result<PathBuf> {
    let value = json!({
        "tool": "rip-zeno",
        "version": env!("CARGO_PKG_VERSION"),
        "command": m.command,
        "preset": m.preset,
        "config": m.config,
        "config_toml": m.config.to_toml(),
        "threads": m.threads,
        "wall_clock_seconds": m.seconds,
        "derived": m.derived,
        "outputs": m.outputs,
    });
    let path = manifest_path(out);
    let mut text = serde_json::to_string_pretty(&value).expect("manifest serialises");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
