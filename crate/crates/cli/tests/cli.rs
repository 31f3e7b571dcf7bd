use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use lambda_transfer_cli::scan::{parse_values, point_document, scan};
use lambda_transfer_cli::{parse_scenario, run_file, scan_file, Kind};
use tempfile::TempDir;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn example(name: &str) -> PathBuf {
    scenarios().join(name)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn every_example_scenario_validates() {
    let mut count = 0;
    for entry in fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 11);
}

#[test]
fn lindblad_transfer_follows_exponential_decay() {
    let out = TempDir::new().unwrap();
    run_file(&example("lindblad_transfer.toml"), Some(out.path())).unwrap();
    let (header, rows) = read_csv(&out.path().join("timeseries.csv"));
    assert_eq!(header[0], "t");
    let pop = column(&header, "pop_mode1");
    assert!(rows.len() > 10);
    for row in &rows {
        assert!((row[pop] - (-row[0]).exp()).abs() <= 1e-6, "t = {}", row[0]);
    }
    assert!(out.path().join("manifest.toml").exists());
}

#[test]
fn zeno_summary_has_monotone_rates() {
    let out = TempDir::new().unwrap();
    run_file(&example("zeno.toml"), Some(out.path())).unwrap();
    let (header, rows) = read_csv(&out.path().join("summary.csv"));
    assert_eq!(header[0], "tau");
    assert_eq!(rows.len(), 5);
    let g = column(&header, "gamma_eff");
    // Periods are listed from longest to shortest.
    assert!(rows.windows(2).all(|w| w[1][0] < w[0][0] && w[1][g] <= w[0][g]));
}

#[test]
fn matched_markov_diode_delivers_to_port2() {
    let out = TempDir::new().unwrap();
    run_file(&example("diode_markov.toml"), Some(out.path())).unwrap();
    let (header, rows) = read_csv(&out.path().join("summary.csv"));
    assert!(rows[0][column(&header, "port2_yield")] >= 0.95);
    assert!(rows[0][column(&header, "leakage")] <= 0.01);
}

#[test]
fn gamma1_scan_minimizes_leakage_at_matching() {
    let text = fs::read_to_string(example("diode_markov.toml")).unwrap();
    let values = [0.25, 0.5, 1.0, 2.0, 4.0];
    let result = scan(&text, "gamma1", &values).unwrap();
    let rows = result.rows();
    let leak = column(&result.columns(), "leakage");
    let best = rows.iter().min_by(|a, b| a[leak].total_cmp(&b[leak])).unwrap();
    assert_eq!(best[0], 1.0);
    assert_eq!(result.columns()[0], "gamma1");
}

#[test]
fn impedance_scan_kind_reports_matching() {
    let out = TempDir::new().unwrap();
    run_file(&example("impedance.toml"), Some(out.path())).unwrap();
    let (header, rows) = read_csv(&out.path().join("summary.csv"));
    assert_eq!(header, ["ratio", "leakage", "port2_yield"]);
    let best = rows.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert_eq!(best[0], 1.0);
}

const DECAY: &str = r#"
name = "decay"
kind = "MicroscopicDecay"

[params]
t_final = 5.0
fit_window = [0.5, 5.0]

[params.reservoir]
classes = 100
eps_max = 50.0
coupling = 0.1
"#;

#[test]
fn fitted_rate_is_linear_in_class_count() {
    let classes = [100.0, 200.0, 400.0];
    let result = scan(DECAY, "reservoir.classes", &classes).unwrap();
    let g = column(&result.columns(), "gamma_est");
    let per_class: Vec<f64> = result.rows().iter().map(|r| r[g] / r[0]).collect();
    // pi f |g|^2 / eps_max, independent oracle for the slope.
    let slope = std::f64::consts::PI * 0.01 / 50.0;
    for s in per_class {
        assert!((s - slope).abs() <= 0.05 * slope, "{s} vs {slope}");
    }
}

#[test]
fn empty_scan_writes_only_the_header() {
    let dir = TempDir::new().unwrap();
    let file = write(dir.path(), "decay.toml", DECAY);
    let out = dir.path().join("out");
    scan_file(&file, "params.t_final", "", Some(&out)).unwrap();
    let text = fs::read_to_string(out.join("scan_summary.csv")).unwrap();
    assert_eq!(
        text,
        "t_final,gamma_est,markov_rate,gamma_est_over_markov_rate,fit_max_relative_residual,norm_drift\n"
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for name in ["lindblad_transfer.toml", "purification.toml", "diode_markov.toml"] {
        let fa = run_file(&example(name), Some(a.path())).unwrap();
        let fb = run_file(&example(name), Some(b.path())).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            if x.extension().is_some_and(|e| e == "csv") {
                assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
            }
        }
    }
}

#[test]
fn scan_rows_equal_single_runs() {
    let dir = TempDir::new().unwrap();
    let path = example("diode_markov.toml");
    let values = "0.5,1,3";
    let scan_out = dir.path().join("scan");
    scan_file(&path, "gamma1", values, Some(&scan_out)).unwrap();
    let scan_text = fs::read_to_string(scan_out.join("scan_summary.csv")).unwrap();
    let scan_rows: Vec<&str> = scan_text.lines().skip(1).collect();

    let template: toml::Table = fs::read_to_string(&path).unwrap().parse().unwrap();
    for (k, x) in parse_values(values).unwrap().into_iter().enumerate() {
        let single = write(dir.path(), &format!("p{k}.toml"), &point_document(&template, "gamma1", x).unwrap());
        let out = dir.path().join(format!("p{k}"));
        run_file(&single, Some(&out)).unwrap();
        let text = fs::read_to_string(out.join("summary.csv")).unwrap();
        let row = text.lines().nth(1).unwrap();
        let (axis, rest) = scan_rows[k].split_once(',').unwrap();
        assert_eq!(axis.parse::<f64>().unwrap(), x);
        assert_eq!(rest, row);
    }
}

#[test]
fn lorentzian_reservoir_needs_an_explicit_coupling() {
    let text = fs::read_to_string(example("anti_zeno.toml"))
        .unwrap()
        .replace("coupling = 0.19947114020071635", "rate = 1.0");
    let err = lambda_transfer_cli::parse_str(&text).unwrap_err();
    assert!(err.to_string().contains("params.reservoir.rate"), "{err}");
    assert_eq!(lambda_transfer_cli::parse_str(&fs::read_to_string(example("anti_zeno.toml")).unwrap()).unwrap().kind, Kind::AntiZenoScan);
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lambda-transfer"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let good = example("lindblad_transfer.toml");
    assert_eq!(binary(&["validate", &path(&good)]).0, 0);

    let bad_rate = fs::read_to_string(&good).unwrap().replace("rate = 1.0", "rate = -1.0");
    let bad = write(dir.path(), "bad.toml", &bad_rate);
    let (code, err) = binary(&["run", &path(&bad), "--out", &path(&dir.path().join("bad"))]);
    assert_eq!(code, 2);
    assert!(err.contains("params.rate") && err.contains("rate must be positive"), "{err}");
    assert!(!dir.path().join("bad").exists());

    let wide = fs::read_to_string(example("diode_full.toml"))
        .unwrap()
        .replace("duration = 50.0", "duration = 1.0");
    let wide = write(dir.path(), "wide.toml", &wide);
    let (code, err) = binary(&["validate", &path(&wide)]);
    assert_eq!(code, 2);
    assert!(err.contains("params.pulse") && err.contains("bandwidth"), "{err}");

    assert_eq!(binary(&["validate", &path(&dir.path().join("missing.toml"))]).0, 2);
    let (code, err) = binary(&["scan", &path(&good), "--axis", "initial", "--values", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("not a numeric scalar"), "{err}");
    assert_eq!(binary(&["scan", &path(&good), "--axis", "rate", "--values", "1,x"]).0, 2);

    // A step far beyond the stability region of the Markov integrator blows
    // up the energy balance; the run completes but the invariant fails.
    let unstable = fs::read_to_string(example("diode_markov.toml"))
        .unwrap()
        .replace("dt = 0.01", "dt = 0.2");
    let unstable = write(dir.path(), "unstable.toml", &unstable);
    let out = dir.path().join("unstable");
    let (code, err) = binary(&["run", &path(&unstable), "--out", &path(&out)]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("energy_balance"), "{err}");
    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["run"]["invariants_passed"], toml::Value::Boolean(false));
    assert_eq!(manifest["invariants"]["energy_balance"]["pass"], toml::Value::Boolean(false));
}
