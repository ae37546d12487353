//! Reports, data tables and their CSV form.

use crate::config::ExperimentConfig;
use crate::CliError;
use serde::Serialize;
use std::path::Path;

/// How a number was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    /// Closed form or finite computation, up to rounding.
    Exact,
    /// Infinite sums or integrals cut off with a controlled remainder.
    CertifiedTruncation,
    /// Sample estimate; carries a standard error.
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub tag: Tag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Column role: an input echoed per row, a flag, or a result with its tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Input,
    Flag,
    Exact,
    CertifiedTruncation,
    MonteCarlo,
}

impl From<Tag> for Role {
    fn from(t: Tag) -> Self {
        match t {
            Tag::Exact => Role::Exact,
            Tag::CertifiedTruncation => Role::CertifiedTruncation,
            Tag::MonteCarlo => Role::MonteCarlo,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl From<Option<bool>> for Cell {
    fn from(v: Option<bool>) -> Self {
        v.map_or(Cell::Empty, Cell::B)
    }
}

/// 17 significant digits round-trip every `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    /// File stem suffix; the main table has none.
    pub name: Option<String>,
    pub columns: Vec<(String, Role)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: Option<&str>, columns: &[(&str, Role)]) -> Self {
        Table {
            name: name.map(str::to_string),
            columns: columns.iter().map(|(c, r)| (c.to_string(), *r)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// `<experiment>.csv` for the main table, `<experiment>-<name>.csv` otherwise.
    pub fn file_name(&self, experiment: &str) -> String {
        match &self.name {
            None => format!("{experiment}.csv"),
            Some(n) => format!("{experiment}-{n}.csv"),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c.0 == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

pub fn write_csv<W: std::io::Write>(table: &Table, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(table.columns.iter().map(|c| c.0.as_str()))?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let f = std::fs::File::create(path).map_err(io)?;
    write_csv(table, std::io::BufWriter::new(f)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize)]
pub struct TableMeta {
    pub file: String,
    pub columns: Vec<ColumnMeta>,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnMeta {
    pub name: String,
    pub role: Role,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub code: String,
    pub generator: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_text: Option<String>,
    pub versions: Versions,
    pub results: Vec<Quantity>,
    pub invariants: Vec<Verdict>,
    /// Non-numeric findings: routes, classifications, accepted outcomes such as signal-below-noise.
    pub notes: Vec<String>,
    pub tables: Vec<TableMeta>,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.invariants.iter().all(|v| v.passed)
    }
}
