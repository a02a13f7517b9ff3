//! Run reports and their serialization to CSV and a TOML summary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, ExperimentConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV cell. Floats use the shortest representation that round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i128> for Cell {
    fn from(v: i128) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// A named table written to `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// The cells of one column.
    pub fn values(&self, name: &str) -> Vec<&Cell> {
        let i = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        self.rows.iter().map(|r| &r[i]).collect()
    }
}

/// An internal invariant evaluated during the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// An exact target next to the value the run produced for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub exact: f64,
    pub estimated: f64,
    pub abs_err: f64,
}

impl Comparison {
    pub fn new(label: impl Into<String>, exact: f64, estimated: f64) -> Self {
        Comparison {
            label: label.into(),
            exact,
            estimated,
            abs_err: (exact - estimated).abs(),
        }
    }
}

/// An auxiliary output file (matrix export, tree dump).
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub comparisons: Vec<Comparison>,
    /// Rows that could not be computed (budget exceeded and the like).
    pub row_errors: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub elapsed_ms: u128,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        RunReport {
            version: VERSION,
            config,
            tables: Vec::new(),
            checks: Vec::new(),
            comparisons: Vec::new(),
            row_errors: Vec::new(),
            artifacts: Vec::new(),
            elapsed_ms: 0,
        }
    }

    pub fn command(&self) -> Command {
        self.config.command
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    /// True when every internal invariant check passed.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// The summary document without its timestamp header.
    pub fn summary_body(&self) -> Result<String, toml::ser::Error> {
        #[derive(Serialize)]
        struct TableInfo<'a> {
            name: &'a str,
            file: String,
            rows: usize,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            version: &'a str,
            command: Command,
            ok: bool,
            failed_checks: usize,
            row_errors: &'a [String],
            tables: Vec<TableInfo<'a>>,
            files: Vec<&'a str>,
            config: &'a ExperimentConfig,
            comparison: &'a [Comparison],
            check: &'a [Check],
        }
        toml::to_string(&Summary {
            version: self.version,
            command: self.command(),
            ok: self.ok(),
            failed_checks: self.checks.iter().filter(|c| !c.ok).count(),
            row_errors: &self.row_errors,
            tables: self
                .tables
                .iter()
                .map(|t| TableInfo {
                    name: &t.name,
                    file: format!("{}.csv", t.name),
                    rows: t.rows.len(),
                })
                .collect(),
            files: self.artifacts.iter().map(|a| a.file.as_str()).collect(),
            config: &self.config,
            comparison: &self.comparisons,
            check: &self.checks,
        })
    }
}

/// Output formats of [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    StructuredText,
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot serialize the summary: {0}")]
    Summary(#[from] toml::ser::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Seconds since the Unix epoch; only ever written to a comment line.
fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn write_csv(table: &Table, path: &Path) -> Result<(), EmitError> {
    let csv_err = |source| EmitError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_string)).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the report into `dir` and returns the paths written.
///
/// `Csv` writes one file per table plus the artifacts; `StructuredText`
/// writes `summary.toml`, whose first line is a comment with the wall-clock
/// time so the rest of the file is reproducible.
pub fn emit(report: &RunReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            for t in &report.tables {
                let path = dir.join(format!("{}.csv", t.name));
                write_csv(t, &path)?;
                written.push(path);
            }
            for a in &report.artifacts {
                let path = dir.join(&a.file);
                fs::write(&path, &a.contents).map_err(io_err(&path))?;
                written.push(path);
            }
        }
        Format::StructuredText => {
            let path = dir.join("summary.toml");
            let body = format!(
                "# orbit-entropy {} summary, written at unix time {}, run took {} ms\n{}",
                report.version,
                timestamp(),
                report.elapsed_ms,
                report.summary_body()?
            );
            fs::write(&path, body).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
