//! Command-line contract: output shapes, exit codes, metadata.

use std::process::Command;

fn tacgap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tacgap"))
}

#[test]
fn f2_prints_one_csv_line() {
    let out = tacgap()
        .args(["f2", "--s", "-1.0", "--nodes", "48"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one line, got {text:?}");
    let fields: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(fields.len(), 3);
    let value: f64 = fields[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
}

#[test]
fn gap_both_routes_agree() {
    let out = tacgap()
        .args([
            "gap",
            "--sigma", "1",
            "--tau", "0.5",
            "--intervals", "-2:2",
            "--route", "both",
            "--nodes", "24",
            "--aux-nodes", "32",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("direct,"));
    assert!(lines[1].starts_with("block,"));
    let rel: f64 = lines[2].strip_prefix("rel_diff,").unwrap().parse().unwrap();
    assert!(rel <= 1e-6, "routes differ by {rel}");
}

#[test]
fn gap_accepts_interval_unions() {
    let out = tacgap()
        .args([
            "gap",
            "--sigma", "1",
            "--tau", "0.5",
            "--intervals", "-2:-1,0:1",
            "--route", "direct",
            "--nodes", "16",
            "--aux-nodes", "24",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().next().unwrap();
    let value: f64 = line
        .strip_prefix("direct,")
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&value));
}

#[test]
fn unknown_flag_exits_with_usage_error() {
    let out = tacgap()
        .args(["f2", "--nonsense", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_subcommand_exits_with_usage_error() {
    let out = tacgap().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_parameter_exits_2() {
    let out = tacgap().args(["f2", "--s", "-20"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("parameter"), "stderr: {err}");
}

#[test]
fn overlapping_intervals_exit_2() {
    let out = tacgap()
        .args([
            "gap",
            "--sigma", "1",
            "--tau", "0.5",
            "--intervals", "-2:2,1:3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_metadata_has_the_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let meta_path = dir.path().join("meta.json");
    let out = tacgap()
        .args(["f2", "--s", "0.0", "--nodes", "32", "--json-meta"])
        .arg(&meta_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&meta_path).unwrap()).unwrap();
    for key in ["command", "params", "nodes", "version", "wall_seconds"] {
        assert!(meta.get(key).is_some(), "missing metadata key {key}");
    }
    assert_eq!(meta["params"]["s"], 0.0);
}

#[test]
fn check_suite_passes() {
    let out = tacgap().args(["check"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "check output:\n{text}");
    assert!(text.lines().filter(|l| l.starts_with("ok ")).count() >= 12);
    assert!(!text.contains("FAIL"));
}

#[test]
fn sweep_csv_has_documented_header() {
    let out = tacgap()
        .args([
            "sweep-edge",
            "--offsets", "-1:1",
            "--sigma", "2",
            "--tau-min", "0",
            "--tau-max", "0.5",
            "--steps", "2",
            "--nodes", "16",
            "--aux-nodes", "24",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param,gap,airy_det,ratio,deviation,err_estimate,window_ok"
    );
    assert_eq!(lines.count(), 2);
}
