//! End-to-end CLI checks: exit codes, determinism, boundary values.

use std::path::Path;
use std::process::{Command, Output};

fn termlend(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_termlend"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_demo_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("demo.json");
    std::fs::write(
        &path,
        r#"{
        "horizon_years": 0.5,
        "steps_per_year": 60,
        "processes": [
            {"kind": "availability", "start": 100.0, "drift": 0.0, "vol": 0.4},
            {"kind": "price", "start": 25.0, "drift": 0.02, "vol": 0.2}
        ],
        "contract": {"quantity": 85.0, "payoff_down": 1.0},
        "discount": {"rate": 0.0, "mode": "none"},
        "valuation": {"paths": 400, "structures": ["constant", "stock_holding"]},
        "scenario": {"axes": ["availability_vol"], "steps": 2, "iterations": [200, 400]}
    }"#,
    )
    .unwrap();
    path
}

#[test]
fn help_succeeds_and_documents_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = termlend(&["--help"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["simulate", "value", "closed-form", "historical", "inventory", "grid"] {
        assert!(text.contains(sub), "--help is missing `{sub}`");
    }
}

#[test]
fn closed_form_boundary_prints_the_full_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = termlend(
        &[
            "closed-form", "--A0", "100", "--H", "100", "--K", "1", "--mu", "0", "--sigma",
            "0.5", "--T", "1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.trim().parse().unwrap();
    assert_eq!(value, 1.0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = termlend(&["value", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    // flag absent entirely
    let out = termlend(&["value"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // flag present but the file does not exist
    let out = termlend(&["value", "--config", "nowhere.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_a_single_line_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
        "horizon_years": 1.0,
        "processes": [{"kind": "availability", "start": 100.0, "drift": 0.0, "vol": 0.3}],
        "contract": {"quantity": -5.0},
        "valuation": {"structures": ["constant"]}
    }"#,
    )
    .unwrap();
    let out = termlend(&["value", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: "));
}

#[test]
fn zero_vol_above_quantity_values_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.json");
    std::fs::write(
        &path,
        r#"{
        "horizon_years": 0.5,
        "steps_per_year": 60,
        "processes": [
            {"kind": "availability", "start": 100.0, "drift": 0.05, "vol": 0.0},
            {"kind": "price", "start": 25.0, "drift": 0.02, "vol": 0.2}
        ],
        "contract": {"quantity": 85.0},
        "valuation": {"paths": 50}
    }"#,
    )
    .unwrap();
    let out = termlend(
        &["value", "--config", "flat.json", "--structure", "stock_holding"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("stock_holding: 0.000000"),
        "unexpected output: {text}"
    );
}

#[test]
fn grid_runs_are_byte_identical_under_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_config(dir.path());
    for run in ["a", "b"] {
        let out = termlend(
            &[
                "grid",
                "--config",
                "demo.json",
                "--seed",
                "42",
                "--out",
                run,
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in ["results_constant.csv", "results_stock_holding.csv", "summary.txt"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identically-seeded runs");
    }
}

#[test]
fn simulate_writes_the_path_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_config(dir.path());
    let out = termlend(
        &[
            "simulate",
            "--config",
            "demo.json",
            "--paths",
            "3",
            "--out",
            "sim",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sim/paths.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,variable,step,value"));
    // horizon 0.5y at 60 steps/yr is 30 loan steps plus the terminal one:
    // 3 paths x 2 variables x 32 points
    assert_eq!(lines.count(), 3 * 2 * 32);
}
