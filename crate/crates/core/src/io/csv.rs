//! Small CSV helpers shared by the sample tables, solver traces, and
//! metrics reports.
//!
//! The dialect is deliberately plain: comma-separated numeric columns, one
//! header line, optional `# key = value` metadata lines above the header.
//! Floats are written with shortest round-trip formatting, so a write →
//! read cycle reproduces every `f64` bit-exactly and repeated writes are
//! byte-identical.

use crate::grid::StructuredGrid;
use crate::{Error, Result};

use std::fmt::Write as _;
use std::path::Path;

/// Write `header` plus numeric `rows`. Every row must match the header
/// width.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_csv_with_meta(path, &[], header, rows)
}

/// Like [`write_csv`] with `# key = value` metadata lines above the header.
pub fn write_csv_with_meta(
    path: &Path,
    meta: &[(&str, &str)],
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let _ = writeln!(out, "{}", header.join(", "));
    for (r, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "CSV row {} has {} fields, header has {}",
                r + 1,
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(", "));
    }
    std::fs::write(path, out).map_err(Error::Io)
}

/// A parsed CSV file: metadata lines, trimmed header names, numeric rows.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvData {
    /// Index of a named column, or an error listing what is present.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidInput(format!(
                "CSV is missing column '{name}' (found: {})",
                self.header.join(", ")
            ))
        })
    }
}

/// Parse a numeric CSV file. Malformed content is reported with its
/// 1-based line number so the offending row can be found and fixed.
pub fn read_csv(path: &Path) -> Result<CsvData> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    let mut meta = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match &header {
            None => header = Some(cells.into_iter().map(str::to_string).collect()),
            Some(h) => {
                if cells.len() != h.len() {
                    return Err(Error::InvalidInput(format!(
                        "line {}: {} fields, expected {} ({})",
                        i + 1,
                        cells.len(),
                        h.len(),
                        path.display()
                    )));
                }
                let mut row = Vec::with_capacity(cells.len());
                for c in cells {
                    row.push(c.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!(
                            "line {}: '{}' is not a number ({})",
                            i + 1,
                            c,
                            path.display()
                        ))
                    })?);
                }
                rows.push(row);
            }
        }
    }
    let header = header
        .ok_or_else(|| Error::InvalidInput(format!("{}: no header line", path.display())))?;
    Ok(CsvData { meta, header, rows })
}

/// Dump one cell field as flat `i, j, k, value` rows in storage order
/// (`i` fastest).
pub fn write_field_csv(path: &Path, grid: &StructuredGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.ncells() {
        return Err(Error::InvalidInput(format!(
            "{} values for a grid of {} cells",
            values.len(),
            grid.ncells()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..values.len())
        .map(|idx| {
            let (i, j, k) = grid.coords(idx);
            vec![i as f64, j as f64, k as f64, values[idx]]
        })
        .collect();
    write_csv(path, &["i", "j", "k", "value"], &rows)
}
