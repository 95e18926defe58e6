//! CSV tables, tolerance checks and the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::RunError;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits, enough to round-trip any double.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A named table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Header row, comma separated, LF line endings.
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(dir.join(self.file_name()))?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Acceptance relation of a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "relation", rename_all = "kebab-case")]
pub enum Bound {
    AtMost { limit: f64 },
    Below { limit: f64 },
    AtLeast { limit: f64 },
    Within { low: f64, high: f64 },
}

impl Bound {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Bound::AtMost { limit } => x <= limit,
            Bound::Below { limit } => x < limit,
            Bound::AtLeast { limit } => x >= limit,
            Bound::Within { low, high } => x >= low && x <= high,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::AtMost { limit } => format!("<= {limit:e}"),
            Bound::Below { limit } => format!("< {limit:e}"),
            Bound::AtLeast { limit } => format!(">= {limit:e}"),
            Bound::Within { low, high } => format!("in [{low}, {high}]"),
        }
    }
}

/// A measured value against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    #[serde(flatten)]
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Self { name: name.into(), measured, bound, passed: bound.holds(measured) }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, Bound::AtMost { limit })
    }

    pub fn below(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, Bound::Below { limit })
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, Bound::AtLeast { limit })
    }

    pub fn within(name: impl Into<String>, measured: f64, low: f64, high: f64) -> Self {
        Self::new(name, measured, Bound::Within { low, high })
    }

    /// One human-readable status line.
    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.6e}, required {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound.describe()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String, RunError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Hashes of every file in `dir` except the manifest, sorted by name.
pub fn hash_directory(dir: &Path) -> Result<Vec<FileHash>, RunError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name != MANIFEST_NAME {
            out.push(FileHash { sha256: sha256_file(&entry.path())?, name });
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Removes artifacts of an earlier run (CSV, SVG, manifest) so the manifest
/// lists exactly what this run produced.
pub fn clear_artifacts(dir: &Path) -> Result<(), RunError> {
    if !dir.exists() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let stale = path.is_file()
            && (path.extension().is_some_and(|e| e == "csv" || e == "svg")
                || path.file_name().is_some_and(|n| n == MANIFEST_NAME));
        if stale {
            fs::remove_file(path)?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(Cell::Num(v).render().parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1.5.into(), "x".into()]);
        t.write(dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1.5000000000000000e0,x\n");
    }

    #[test]
    fn bounds() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::below("a", 1.0, 1.0).passed);
        assert!(Check::within("a", 0.3, 0.2, 0.6).passed);
        assert!(!Check::within("a", f64::NAN, 0.2, 0.6).passed);
    }
}
