//! Versioned CSV tables with a metadata preamble.
//!
//! Every artifact starts with `# key = value` comment lines (schema name,
//! config hash, equation, coordinate columns), then a header row, then data
//! rows. Floats are written with 17 significant digits so files round-trip
//! exactly and byte-identical reruns stay byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// An in-memory table: ordered metadata, column names, string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Full-precision float formatting; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    /// Starts a table with the two mandatory metadata keys.
    pub fn new(schema: &str, config_hash: &str, columns: &[&str]) -> Table {
        Table {
            meta: vec![
                ("schema".into(), schema.into()),
                ("config_hash".into(), config_hash.into()),
            ],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, key: &str, value: &str) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Appends a row of floats, formatted at full precision.
    pub fn push_row_f64(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .with_context(|| format!("table has no column {name:?}"))
    }

    /// One column parsed as floats.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.col(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[idx]
                    .parse::<f64>()
                    .with_context(|| format!("column {name:?} row {i}: bad float {:?}", row[idx]))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut meta = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            match &columns {
                None => columns = Some(cells),
                Some(cols) => {
                    if cells.len() != cols.len() {
                        bail!(
                            "line {}: expected {} cells, got {}",
                            lineno + 1,
                            cols.len(),
                            cells.len()
                        );
                    }
                    rows.push(cells);
                }
            }
        }
        let columns = columns.context("table has no header row")?;
        Ok(Table {
            meta,
            columns,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Table> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Table::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}
