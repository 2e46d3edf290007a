//! Deterministic tabular output: CSV with `#`-prefixed metadata header lines,
//! a lossless reader for round-trip checks, and a grayscale PGM writer for
//! quick visual regression of 2D maps.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces the exact `f64` bit patterns.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One value in a table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => {
                let s = v.to_string();
                // keep integral floats distinguishable from integers
                if s.contains(['.', 'e', 'E']) || v.is_nan() || v.is_infinite() {
                    write!(f, "{s}")
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
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

/// In-memory table: metadata key/value pairs, column names, rows.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Table {
            metadata: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Serialize: `# key = value` metadata lines, a column-name line, then
    /// comma-separated rows.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.render().as_bytes())?;
        Ok(())
    }

    /// Parse a file produced by [`Table::render`]. Cells containing `.`,
    /// `e`/`E`, `inf` or `nan` are read as floats, everything else as
    /// integers; this reproduces the original cells exactly.
    pub fn read_from<R: BufRead>(r: R) -> Result<Table> {
        let mut table = Table::default();
        let mut have_columns = false;
        for line in r.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    table
                        .metadata
                        .push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !have_columns {
                table.columns = line.split(',').map(str::to_string).collect();
                have_columns = true;
                continue;
            }
            let mut row = Vec::with_capacity(table.columns.len());
            for cell in line.split(',') {
                row.push(parse_cell(cell)?);
            }
            if row.len() != table.columns.len() {
                return Err(Error::InvalidInput(format!(
                    "row with {} cells in a {}-column table",
                    row.len(),
                    table.columns.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

fn parse_cell(s: &str) -> Result<Cell> {
    let is_float = s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN");
    if is_float {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad float cell {s:?}")))?;
        Ok(Cell::Float(v))
    } else {
        let v: i64 = s
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad integer cell {s:?}")))?;
        Ok(Cell::Int(v))
    }
}

/// Write a row-major map as an ASCII PGM (P2) grayscale image, normalized to
/// the maximum value; rows top to bottom, 255 = maximum.
pub fn write_pgm<W: Write>(mut w: W, rows: &[Vec<f64>]) -> Result<()> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if height == 0 || width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidInput("empty or ragged PGM map".into()));
    }
    let max = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |a, &b| a.max(b));
    writeln!(w, "P2")?;
    writeln!(w, "{width} {height}")?;
    writeln!(w, "255")?;
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let g = if max > 0.0 {
                    (v / max * 255.0).round() as i64
                } else {
                    0
                };
                g.clamp(0, 255).to_string()
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
