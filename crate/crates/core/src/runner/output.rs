//! CSV tables and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metrics::Alpha;

pub const UNIT_TIME: &str = "(t̃)";
pub const UNIT_TEMPERATURE: &str = "(T̃)";
pub const UNIT_NONE: &str = "(dimensionless)";
pub const UNIT_CURRENT: &str = "(ħ/t̃²)";
pub const UNIT_CURRENT_DERIVATIVE: &str = "(ħ/(t̃² T̃))";
pub const UNIT_RATE: &str = "(t̃⁻¹)";

/// Marker written in place of an amplification whose denominator vanished.
pub const DIVERGENT: &str = "divergent";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Divergent,
    /// The point failed; the reason is in the row's error column.
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Alpha> for Cell {
    fn from(a: Alpha) -> Self {
        match a {
            Alpha::Finite(v) => Cell::Num(v),
            Alpha::Divergent => Cell::Divergent,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<Option<Alpha>> for Cell {
    fn from(v: Option<Alpha>) -> Self {
        v.map_or(Cell::Missing, Cell::from)
    }
}

/// 12 significant digits in scientific notation; fixed so reruns are
/// byte-identical.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // Normalise -0.0.
        return format!("{:.11e}", 0.0);
    }
    format!("{v:.11e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Divergent => DIVERGENT.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: &'static str) -> Self {
        Column { name: name.into(), unit }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub error: Option<String>,
}

/// One output file, arranged column-per-curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>, error: Option<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width differs from header in {}", self.name);
        self.rows.push(Row { cells, error });
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{} {}", c.name, c.unit))
            .chain(std::iter::once("errors".to_string()))
            .collect();
        let mut out = format!("# {}\n", header.join(","));
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for row in &self.rows {
            let mut rec: Vec<String> = row.cells.iter().map(Cell::render).collect();
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec).expect("writing to memory");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("flush to memory")).expect("utf-8"));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
    pub failed_rows: usize,
}

/// Provenance record, written after every table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub timestamp: String,
    pub duration_seconds: f64,
    /// The fully resolved configuration document; `wtt run --manifest`
    /// re-runs it.
    pub parameters: crate::runner::config::RunConfig,
    pub files: Vec<FileRecord>,
    pub failed_points: usize,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every table into `dir`, returning one record per file.
pub fn write_tables(dir: &Path, tables: &[Table]) -> std::io::Result<Vec<FileRecord>> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let body = t.to_csv();
            let path = dir.join(t.file_name());
            let mut f = fs::File::create(&path)?;
            f.write_all(body.as_bytes())?;
            Ok(FileRecord { name: t.file_name(), sha256: sha256_hex(body.as_bytes()), rows: t.rows.len(), failed_rows: t.failures() })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> std::io::Result<PathBuf> {
    let path = dir.join(RunManifest::FILE_NAME);
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(format_number(36.27), "3.62700000000e1");
        assert_eq!(format_number(-0.0), "0.00000000000e0");
        assert_eq!(format_number(1e-9), "1.00000000000e-9");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo", vec![Column::new("t", UNIT_TIME), Column::new("alpha_L", UNIT_NONE)]);
        t.push(vec![Cell::Num(0.5), Cell::Divergent], None);
        t.push(vec![Cell::Num(1.0), Cell::Missing], Some("stencil, out of domain".into()));
        let text = t.to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# t (t̃),alpha_L (dimensionless),errors");
        assert_eq!(lines[1], "5.00000000000e-1,divergent,");
        assert_eq!(lines[2], "1.00000000000e0,,\"stencil, out of domain\"");
        assert_eq!(t.failures(), 1);
    }

    #[test]
    fn checksum() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
