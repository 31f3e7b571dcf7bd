//! One-parameter scans over a scenario template.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use toml::{Table as TomlTable, Value};

use crate::error::{CliError, CliResult};
use crate::output::{csv_text, files_value, invariant_table, write_manifest};
use crate::run::{execute, summary_columns, RunOutput};
use crate::scenario::{parse_str, Scenario};

/// Splits `v1,v2,...`; an empty string is an empty list.
pub fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("--values: `{s}` is not a number")))
        })
        .collect()
}

fn axis_path(axis: &str) -> Vec<&str> {
    axis.strip_prefix("params.").unwrap_or(axis).split('.').collect()
}

fn slot<'a>(table: &'a mut TomlTable, axis: &str) -> CliResult<&'a mut Value> {
    let path = axis_path(axis);
    let missing = || CliError::Config(format!("--axis {axis}: no such key in [params]"));
    let mut current = table
        .get_mut("params")
        .and_then(Value::as_table_mut)
        .ok_or_else(missing)?;
    let (last, parents) = path.split_last().ok_or_else(missing)?;
    for key in parents {
        current = current
            .get_mut(*key)
            .and_then(Value::as_table_mut)
            .ok_or_else(missing)?;
    }
    let value = current.get_mut(*last).ok_or_else(missing)?;
    if !matches!(value, Value::Integer(_) | Value::Float(_)) {
        return Err(CliError::Config(format!(
            "--axis {axis}: the value is a {} and not a numeric scalar",
            value.type_str()
        )));
    }
    Ok(value)
}

/// The template with `axis` set to `x`. Integer keys stay integers when
/// `x` is integral.
pub fn point_document(template: &TomlTable, axis: &str, x: f64) -> CliResult<String> {
    let mut doc = template.clone();
    let v = slot(&mut doc, axis)?;
    *v = match v {
        Value::Integer(_) if x.fract() == 0.0 && x.abs() < 9.0e15 => Value::Integer(x as i64),
        _ => Value::Float(x),
    };
    toml::to_string(&doc).map_err(|e| CliError::Config(e.to_string()))
}

pub struct ScanResult {
    pub template: Scenario,
    pub axis: String,
    pub values: Vec<f64>,
    pub points: Vec<RunOutput>,
}

impl ScanResult {
    pub fn columns(&self) -> Vec<String> {
        let mut c = vec![axis_path(&self.axis).join(".")];
        c.extend(summary_columns(self.template.kind).iter().map(|s| s.to_string()));
        c
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .zip(&self.points)
            .map(|(&x, p)| {
                let mut row = vec![x];
                row.extend_from_slice(&p.summary);
                row
            })
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.points.iter().all(RunOutput::passed)
    }
}

/// Validates every point up front, then runs them in parallel. Rows come
/// back in the order of `values`.
pub fn scan(text: &str, axis: &str, values: &[f64]) -> CliResult<ScanResult> {
    let template = parse_str(text)?;
    let table = template.source.clone();
    slot(&mut table.clone(), axis)?;
    let scenarios = values
        .iter()
        .map(|&x| {
            parse_str(&point_document(&table, axis, x)?).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{axis} = {x}: {m}")),
                other => other,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let points = scenarios
        .par_iter()
        .map(execute)
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ScanResult {
        template,
        axis: axis.to_string(),
        values: values.to_vec(),
        points,
    })
}

pub fn write_scan(dir: &Path, result: &ScanResult, started: Instant) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let summary = dir.join("scan_summary.csv");
    fs::write(&summary, csv_text(&result.columns(), &result.rows()))?;
    let mut files = vec![summary];

    let mut run = TomlTable::new();
    run.insert("completed".into(), Value::Boolean(true));
    run.insert("invariants_passed".into(), Value::Boolean(result.passed()));
    run.insert("wall_clock_seconds".into(), Value::Float(started.elapsed().as_secs_f64()));
    run.insert("axis".into(), Value::String(axis_path(&result.axis).join(".")));
    run.insert("values".into(), Value::Array(result.values.iter().map(|&x| Value::Float(x)).collect()));
    run.insert("outputs".into(), files_value(&files));
    let points = result
        .points
        .iter()
        .zip(&result.values)
        .map(|(p, &x)| {
            let mut t = TomlTable::new();
            t.insert("value".into(), Value::Float(x));
            t.insert("invariants".into(), Value::Table(invariant_table(&p.invariants)));
            Value::Table(t)
        })
        .collect();

    let mut manifest = TomlTable::new();
    manifest.insert("scenario".into(), Value::Table(result.template.source.clone()));
    manifest.insert("run".into(), Value::Table(run));
    manifest.insert("points".into(), Value::Array(points));
    files.push(write_manifest(dir, &manifest)?);
    Ok(files)
}
