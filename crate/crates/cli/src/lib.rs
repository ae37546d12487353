//! Configuration, orchestration and reporting for the pinning experiments.

pub mod config;
pub mod experiments;
pub mod report;

use config::ExperimentConfig;
use report::{emit_csv, ColumnMeta, Report, Table, TableMeta, Versions};
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Malformed configuration or arguments.
    Config(String),
    Io(String),
    Core(pinning::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pinning::Error> for CliError {
    fn from(e: pinning::Error) -> Self {
        CliError::Core(e)
    }
}

/// Exit status: 1 bad input, 2 numerical non-convergence, 3 invariant violation.
impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pinning::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(E::Invariant(_)) => 3,
            CliError::Core(E::DegenerateVariance) => 2,
            CliError::Core(e) if e.is_convergence() => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub const EXIT_INVARIANT: i32 = 3;

/// Run one experiment. The report echoes the configuration and lists every table.
pub fn run(cfg: &ExperimentConfig, config_text: Option<&str>) -> Result<(Report, Vec<Table>), CliError> {
    let t0 = Instant::now();
    let out = experiments::dispatch(cfg)?;
    let tables = out.tables;
    let metas = tables
        .iter()
        .map(|t| TableMeta {
            file: t.file_name(&cfg.experiment),
            columns: t.columns.iter().map(|(n, r)| ColumnMeta { name: n.clone(), role: *r }).collect(),
            rows: t.rows.len(),
        })
        .collect();
    let report = Report {
        config: cfg.clone(),
        config_text: config_text.map(str::to_string),
        versions: Versions {
            code: env!("CARGO_PKG_VERSION").to_string(),
            generator: pinning::quenched::GENERATOR_TAG.to_string(),
        },
        results: out.results,
        invariants: out.invariants,
        notes: out.notes,
        tables: metas,
        wall_clock_s: t0.elapsed().as_secs_f64(),
    };
    Ok((report, tables))
}

/// `<experiment>.json` plus one CSV per table in `dir`.
pub fn write_outputs(report: &Report, tables: &[Table], dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for t in tables {
        emit_csv(t, &dir.join(t.file_name(&report.config.experiment)))?;
    }
    let path = dir.join(format!("{}.json", report.config.experiment));
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
