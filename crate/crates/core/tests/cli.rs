use std::path::Path;
use std::process::{Command, Output};

use lattice_scatter::scan::OutputRow;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lattice-scatter"));
    cmd.env_remove("LATTICE_SCATTER_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn fig2_writes_361_rows_with_normalized_columns() {
    let out = run(&["fig2", "--state", "coherent"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 361);
    let r_col = header.iter().position(|h| h == "r_per_nk").unwrap();
    assert!(rows.iter().all(|r| (r[r_col] - 1.0).abs() < 1e-10));
    assert!(rows.iter().all(|r| r.len() == header.len()));
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.json");
    let status = bin()
        .args(["scan", "--N", "6", "--M", "4", "--points", "7", "--oracle", "--format", "json", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<OutputRow> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 7);
    for r in &rows {
        assert!((r.oracle_r.unwrap() - r.r).abs() < 1e-9 * (1.0 + r.r.abs()));
    }
    let again = serde_json::to_string_pretty(&rows).unwrap();
    assert_eq!(again.trim_end(), text.trim_end());
}

#[test]
fn out_dir_environment_variable_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["fig3", "--points", "5"])
        .env("LATTICE_SCATTER_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"state": "mi", "N": 8, "M": 4, "points": 3}"#).unwrap();
    let from_file = run(&["scan", "--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success());
    assert_eq!(std::str::from_utf8(&from_file.stdout).unwrap().lines().count(), 4);
    let overridden = run(&["scan", "--config", cfg.to_str().unwrap(), "--points", "5"]);
    assert_eq!(std::str::from_utf8(&overridden.stdout).unwrap().lines().count(), 6);
}

#[test]
fn table1_reports_superfluid_statistics() {
    let out = run(&["table1", "--N", "4", "--M", "2", "--K", "1"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, ["n2", "var_n", "nk2", "var_nk", "nanb", "cov"]);
    // SF N=4, M=2: n2 = 5, nanb = 3.
    assert!((rows[0][0] - 5.0).abs() < 1e-12);
    assert!((rows[0][4] - 3.0).abs() < 1e-12);
}

#[test]
fn check_passes_on_small_transverse_superfluid() {
    let out = run(&["check", "--N", "4", "--M", "4", "--K", "4", "--points", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exact"));
}

#[test]
fn check_with_monte_carlo_passes() {
    let out = run(&["check", "--N", "5", "--M", "3", "--points", "5", "--mc", "20000", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn validation_errors_exit_with_1() {
    for args in [
        &["scan", "--M", "0"][..],
        &["scan", "--state", "mi", "--N", "5", "--M", "3"],
        &["scan", "--K", "40"],
        &["scan", "--lambda0", "-1"],
        &["scan", "--theta0", "4"],
        &["scan", "--points", "1"],
        &["scan", "--probe", "standing", "--normalize", "bogus"],
        &["scan", "--no-such-flag"],
        &["scan", "--N", "30", "--M", "30", "--oracle", "--cap", "10"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn cap_message_suggests_alternatives() {
    let out = run(&["check", "--N", "30", "--M", "30", "--cap", "1000"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--mc"), "{msg}");
}

#[test]
fn unreadable_paths_exit_with_3() {
    let out = run(&["scan", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["scan", "--points", "3", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    let out = run(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monte_carlo_scan_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let produce = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let status = bin()
            .args(["scan", "--N", "6", "--M", "6", "--points", "11", "--mc", "4096", "--seed", "9", "--out"])
            .arg(&path)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(Path::new(&path)).unwrap()
    };
    assert_eq!(produce("1", "a.csv"), produce("6", "b.csv"));
}
