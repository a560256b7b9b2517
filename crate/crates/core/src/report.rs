//! Deterministic tabular reports: CSV as the canonical artifact with a JSON
//! mirror, byte-identical across reruns with the same seed.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One table cell; integers and floats format differently in CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest round-trip float formatting keeps output deterministic.
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// Fixed-column table emitted as CSV plus a JSON mirror.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_csv_string().as_bytes())
    }

    /// JSON mirror of the CSV: `{"columns": [...], "rows": [[...], ...]}`.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Invalid(e.to_string()))?;
        write_bytes(path, text.as_bytes())
    }

    /// Write `<path>` as CSV and `<path with .json extension>` as the mirror.
    pub fn write_with_mirror(&self, csv_path: &Path) -> Result<()> {
        self.write_csv(csv_path)?;
        self.write_json(&csv_path.with_extension("json"))
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = ReportTable::new(&["k", "value"]);
        assert_eq!(t.to_csv_string(), "k,value\n");
    }

    #[test]
    fn csv_formats_ints_and_floats() {
        let mut t = ReportTable::new(&["k", "value"]);
        t.push(vec![Cell::from(16usize), Cell::from(0.125f64)]);
        t.push(vec![Cell::from(64usize), Cell::from(1.0 / 3.0)]);
        assert_eq!(
            t.to_csv_string(),
            "k,value\n16,0.125\n64,0.3333333333333333\n"
        );
    }

    #[test]
    fn files_are_byte_identical_across_reruns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let mut t = ReportTable::new(&["a"]);
        t.push(vec![Cell::from(0.1f64)]);
        t.write_with_mirror(&path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let first_json = std::fs::read(path.with_extension("json")).unwrap();
        t.write_with_mirror(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        assert_eq!(std::fs::read(path.with_extension("json")).unwrap(), first_json);
    }
}
