//! End-to-end checks of the spinwire binary: dispatch outcomes, artifact
//! replay, and the atomic-output contract.

use std::path::Path;
use std::process::{Command, Output};

fn spinwire(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinwire"));
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

#[test]
fn dj_constant_oracle_passes_and_reports_its_verdict() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = spinwire(&["dj", "--case", "f0", "--out"], &[dir.path()]);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let report = String::from_utf8(read(dir.path(), "report.json")).expect("utf8");
    assert!(report.contains("\"pass\": true"), "report: {report}");
    assert!(report.contains("\"constant\""), "report: {report}");
    let csv = String::from_utf8(read(dir.path(), "dj.csv")).expect("utf8");
    let row = csv.lines().nth(1).expect("one data row");
    assert!(row.starts_with("f0,"), "row: {row}");
    assert!(row.contains(",constant,true"), "row: {row}");
}

#[test]
fn two_step_sweep_writes_two_rows_with_passing_endpoints() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = spinwire(&["init-sweep", "--steps", "2", "--out"], &[dir.path()]);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(read(dir.path(), "init_sweep.csv")).expect("utf8");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "header plus two rows, got {csv:?}");
    assert_eq!(
        lines[0],
        "alpha_eVm,theta_rad,p0_up,p0_down,p1_up,p1_down,\
         analytic_p0_up,analytic_p0_down,analytic_p1_up,analytic_p1_down"
    );
    let report = String::from_utf8(read(dir.path(), "report.json")).expect("utf8");
    assert!(report.contains("\"pass\": true"), "report: {report}");
}

#[test]
fn manifest_replay_reproduces_every_artifact_byte_for_byte() {
    let first = tempfile::tempdir().expect("tempdir");
    let out = spinwire(&["beamsplit", "--out"], &[first.path()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let second = tempfile::tempdir().expect("tempdir");
    let manifest = first.path().join("manifest.json");
    let out = spinwire(
        &["beamsplit", "--from-manifest"],
        &[&manifest, Path::new("--out"), second.path()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for name in ["report.json", "beamsplit.csv", "manifest.json"] {
        assert_eq!(
            read(first.path(), name),
            read(second.path(), name),
            "{name} differs between the run and its replay"
        );
    }
}

#[test]
fn manifest_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = spinwire(&["beamsplit", "--out"], &[dir.path()]);
    assert!(out.status.success());
    let manifest = dir.path().join("manifest.json");
    let other = tempfile::tempdir().expect("tempdir");
    let out = spinwire(
        &["nand", "--from-manifest"],
        &[&manifest, Path::new("--out"), other.path()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beamsplit"));
}

#[test]
fn corrupted_config_exits_nonzero_and_writes_nothing() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "experiment = \"nand\"\n[nand]\ntemprature = 3\n").expect("write");
    let target = dir.path().join("out");
    let out = spinwire(
        &["nand", "--config"],
        &[&config, Path::new("--out"), &target],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("temprature"), "stderr: {err}");
    assert!(!target.exists(), "no partial outputs on a failed parse");
}
