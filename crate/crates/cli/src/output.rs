//! CSV and manifest writers.
//!
//! Numbers are written as `{:.16e}`, which keeps 17 significant digits and
//! round-trips every `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use toml::{Table as TomlTable, Value};

use crate::error::CliResult;
use crate::run::{summary_columns, Bound, Invariant, RunOutput, Table};
use crate::scenario::Scenario;

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_text(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for row in rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", format_number(*x));
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(dir: &Path, table: &Table) -> CliResult<PathBuf> {
    let path = dir.join(&table.file);
    fs::write(&path, csv_text(&table.columns, &table.rows))?;
    Ok(path)
}

/// The tables a run writes. Kinds without a keyed summary table get a
/// one-row `summary.csv` of their scalar results.
pub fn run_tables(scenario: &Scenario, out: &RunOutput) -> Vec<Table> {
    let mut tables = out.tables.clone();
    if !tables.iter().any(|t| t.file == "summary.csv") {
        tables.push(Table {
            file: "summary.csv".into(),
            columns: summary_columns(scenario.kind).iter().map(|c| c.to_string()).collect(),
            rows: vec![out.summary.clone()],
        });
    }
    tables
}

fn float_table<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> TomlTable {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::Float(v)))
        .collect()
}

pub fn invariant_table(invariants: &[Invariant]) -> TomlTable {
    invariants
        .iter()
        .map(|inv| {
            let mut t = TomlTable::new();
            t.insert("value".into(), Value::Float(inv.value));
            let bound = match inv.bound {
                Bound::AtMost => "at_most",
                Bound::AtLeast => "at_least",
            };
            t.insert(bound.into(), Value::Float(inv.limit));
            t.insert("pass".into(), Value::Boolean(inv.pass()));
            (inv.name.to_string(), Value::Table(t))
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &TomlTable) -> CliResult<PathBuf> {
    let path = dir.join("manifest.toml");
    let text = toml::to_string(manifest).map_err(|e| crate::error::CliError::Io(e.to_string()))?;
    fs::write(&path, text)?;
    Ok(path)
}

pub fn files_value(files: &[PathBuf]) -> Value {
    Value::Array(
        files
            .iter()
            .map(|p| Value::String(p.file_name().unwrap_or_default().to_string_lossy().into_owned()))
            .collect(),
    )
}

/// Writes every table, then the manifest. Returns all written paths.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    out: &RunOutput,
    elapsed: Duration,
) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for table in run_tables(scenario, out) {
        files.push(write_csv(dir, &table)?);
    }

    let mut run = TomlTable::new();
    run.insert("completed".into(), Value::Boolean(true));
    run.insert("invariants_passed".into(), Value::Boolean(out.passed()));
    run.insert("wall_clock_seconds".into(), Value::Float(elapsed.as_secs_f64()));
    run.insert("outputs".into(), files_value(&files));

    let mut manifest = TomlTable::new();
    manifest.insert("scenario".into(), Value::Table(scenario.source.clone()));
    manifest.insert("run".into(), Value::Table(run));
    manifest.insert("derived".into(), Value::Table(float_table(out.derived.iter().copied())));
    manifest.insert(
        "summary".into(),
        Value::Table(float_table(
            summary_columns(scenario.kind).iter().copied().zip(out.summary.iter().copied()),
        )),
    );
    manifest.insert("invariants".into(), Value::Table(invariant_table(&out.invariants)));
    files.push(write_manifest(dir, &manifest)?);
    Ok(files)
}
