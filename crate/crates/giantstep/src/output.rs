//! On-disk formats: CSV tables, the JSON run manifest and `.npy` weight dumps.
//!
//! Column layouts are listed in `docs/schemas.md`; any change bumps
//! [`SCHEMA_VERSION`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use giantstep_core::Mat;
use serde::{Deserialize, Serialize};

use crate::config::Cell;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub git_hash: String,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub threads: usize,
    /// The configuration as TOML; `run` on it reproduces every file.
    pub config: String,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// `None` for kinds without a size sweep (staircase).
    pub cell: Option<Cell>,
    /// Table name → file name relative to the manifest.
    pub files: BTreeMap<String, String>,
    /// Kind-specific scalars (step size, predictions, …).
    #[serde(default)]
    pub summary: BTreeMap<String, serde_json::Value>,
}

/// Column-ordered table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.write_record(&self.header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
        let header = r.headers().map_err(|e| CliError::Io(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, String> {
        self.header.iter().position(|h| h == name).ok_or_else(|| format!("missing column `{name}`"))
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>, String> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>, String> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[j].parse::<f64>().map_err(|_| format!("column `{name}` row {}: cannot read {:?} as a number", i + 1, r[j]))
            })
            .collect()
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(f), m).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Missing(format!("{}: not a run manifest: {e}", path.display())))
}

/// Writes `m` as a C-order `f64` array of shape `(rows, cols)`.
pub fn write_npy(path: &Path, m: &Mat) -> Result<(), CliError> {
    use npyz::WriterBuilder;
    let err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let f = BufWriter::new(File::create(path).map_err(err)?);
    let mut w = npyz::WriteOptions::new()
        .default_dtype()
        .shape(&[m.nrows() as u64, m.ncols() as u64])
        .writer(f)
        .begin_nd()
        .map_err(err)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.push(&m[(i, j)]).map_err(err)?;
        }
    }
    w.finish().map_err(err)
}

/// Commit of the working tree, or `"unknown"` outside a git checkout.
pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.npy");
        let m = Mat::from_fn(3, 2, |i, j| (i * 10 + j) as f64);
        write_npy(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let arr = npyz::NpyFile::new(&bytes[..]).unwrap();
        assert_eq!(arr.shape(), &[3, 2]);
        let v: Vec<f64> = arr.into_vec().unwrap();
        assert_eq!(v, vec![0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), num(0.1)]);
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("b").unwrap(), vec![0.1]);
        assert!(back.floats("c").is_err());
    }
}
