//! Tables written as CSV (with a `#` metadata header) or JSON.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64.
            Cell::Real(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Real(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Metadata specific to this table (fitted constants and the like).
    pub extra: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.extra.push((key.to_string(), value.to_string()));
    }
}

pub struct Report {
    pub command: &'static str,
    pub metadata: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Report {
    fn header_pairs<'a>(&'a self, table: &'a Table) -> Vec<(&'a str, &'a str)> {
        let mut out = vec![("command", self.command), ("version", env!("CARGO_PKG_VERSION"))];
        out.extend(self.metadata.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        out.extend(table.extra.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        out
    }

    /// Writes every table under `dir`, returning the paths written.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for table in &self.tables {
            let (path, bytes) = match format {
                Format::Csv => (dir.join(format!("{}.csv", table.name)), self.csv(table)?),
                Format::Json => (dir.join(format!("{}.json", table.name)), self.json(table)?),
            };
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }

    fn csv(&self, table: &Table) -> Result<Vec<u8>, CliError> {
        let mut out = String::new();
        out.push_str("# countsketch experiment output\n");
        for (k, v) in self.header_pairs(table) {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(out.into_bytes());
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(&table.columns).map_err(internal)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(internal)?;
        }
        w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
    }

    fn json(&self, table: &Table) -> Result<Vec<u8>, CliError> {
        let metadata: Map<String, Value> = self
            .header_pairs(table)
            .into_iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let rows: Vec<Value> = table
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "metadata": metadata,
            "columns": table.columns,
            "rows": rows,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}
