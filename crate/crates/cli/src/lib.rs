//! Scenario-file front end for `lambda-transfer`.
//!
//! `run` executes one scenario and writes CSV tables plus `manifest.toml`;
//! `scan` repeats a scenario over values of one numeric parameter;
//! `validate` only parses. Exit codes: 0 success, 1 I/O failure,
//! 2 parse or configuration error, 3 invariant failure.

pub mod error;
pub mod initial;
pub mod output;
pub mod run;
pub mod scan;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::{CliError, CliResult};
pub use scenario::{parse_scenario, parse_str, Kind, Scenario};

/// `--out` wins over `outputs.dir`, which wins over `output/<name>`.
pub fn output_dir(scenario: &Scenario, out: Option<&Path>) -> PathBuf {
    match (out, &scenario.outputs.dir) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => Path::new("output").join(&scenario.name),
    }
}

/// Runs a scenario file. The manifest is written whenever the run
/// completes; failed invariants then turn into [`CliError::Invariant`].
pub fn run_file(path: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let scenario = parse_scenario(path)?;
    let started = Instant::now();
    let result = run::execute(&scenario)?;
    let dir = output_dir(&scenario, out);
    let files = output::write_run(&dir, &scenario, &result, started.elapsed())?;
    invariant_status(&result.invariants)?;
    Ok(files)
}

pub fn scan_file(path: &Path, axis: &str, values: &str, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let values = scan::parse_values(values)?;
    let started = Instant::now();
    let result = scan::scan(&text, axis, &values)?;
    let dir = output_dir(&result.template, out);
    let files = scan::write_scan(&dir, &result, started)?;
    for (x, p) in result.values.iter().zip(&result.points) {
        invariant_status(&p.invariants).map_err(|e| CliError::Invariant(format!("{axis} = {x}: {e}")))?;
    }
    Ok(files)
}

fn invariant_status(invariants: &[run::Invariant]) -> CliResult<()> {
    let failed: Vec<String> = invariants
        .iter()
        .filter(|i| !i.pass())
        .map(|i| format!("{} = {:e} (limit {:e})", i.name, i.value, i.limit))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed.join("; ")))
    }
}
