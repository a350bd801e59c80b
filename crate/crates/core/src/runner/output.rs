use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A CSV cell. Floats are written in scientific notation with 17
/// significant digits, which round-trips every f64.
#[derive(Clone, Debug)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// An in-memory CSV table with a header row.
#[derive(Clone, Debug)]
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// A file produced by a run, as listed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    /// Simulation time of a snapshot, s.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time_s: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_table(dir: &Path, name: &str, table: &CsvTable, time_s: Option<f64>) -> Result<OutputRecord> {
    let bytes = table.to_bytes();
    let path = dir.join(name);
    std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(OutputRecord {
        file: name.to_string(),
        sha256: sha256_hex(&bytes),
        rows: table.len(),
        time_s,
    })
}
