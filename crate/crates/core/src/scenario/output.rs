use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{OutputFormat, ScenarioConfig};
use crate::error::{Error, Result};
use crate::spectra::HamiltonianModel;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    Empty,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            // Display for f64 is the shortest string that round-trips.
            Cell::F(v) => format!("{v}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::I(v) => (*v).into(),
            Cell::S(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F(v) => Some(*v),
            Cell::I(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Named table written as `<name>.csv` or `<name>.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    /// Numeric values of one column; `None` for empty cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<PathBuf> {
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{}.csv", self.name));
                let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
                w.write_record(&self.columns).map_err(csv_error)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).map_err(csv_error)?;
                }
                w.flush()?;
                Ok(path)
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{}.json", self.name));
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                write_json(&path, &rows)?;
                Ok(path)
            }
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Everything a scenario produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

impl ScenarioOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn version() -> &'static str {
    env!("CCA_VERSION")
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub scenario: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub inputs: &'a ScenarioConfig,
    /// The model as evaluated, with every default filled in.
    pub model: &'a HamiltonianModel,
    pub files: Vec<String>,
}

/// Writes tables, `summary.json` and `manifest.json` into the output
/// directory; returns the written paths.
pub fn write_all(
    cfg: &ScenarioConfig,
    model: &HamiltonianModel,
    out: &ScenarioOutput,
    wall: f64,
) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &out.tables {
        files.push(t.write(dir, cfg.output.format)?);
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &out.summary)?;
    files.push(summary);
    let names = files.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    let manifest = Manifest {
        scenario: cfg.scenario.to_string(),
        version: version(),
        seed: cfg.seed,
        wall_time_s: wall,
        inputs: cfg,
        model,
        files: names,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    files.push(path);
    Ok(files)
}
