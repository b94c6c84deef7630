//! End-to-end checks of the binary: determinism of reports, exit codes, and
//! the shapes promised by the schema.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_toric-mirror")
}

fn inputs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let input = inputs_dir().join("p12.json");
    let input = input.to_str().unwrap();
    for sub in ["validate", "box", "cohomology", "gram", "ifun", "mirror-map", "gkz-check"] {
        let a = run(&[sub, "--input", input]);
        let b = run(&[sub, "--input", input]);
        assert_eq!(a.stdout, b.stdout, "{sub} not deterministic");
        assert!(a.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&a.stderr));
    }
}

#[test]
fn validate_reports_box_table() {
    let input = inputs_dir().join("p12.json");
    let out = run(&["validate", "--input", input.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    let boxes = v["box"].as_array().unwrap();
    assert_eq!(boxes.len(), 2);
    assert_eq!(boxes[1]["age"], "1/2");
    assert!(v["convention"].is_object());
}

#[test]
fn gkz_check_exact_zero() {
    let input = inputs_dir().join("p1.json");
    let out = run(&["gkz-check", "--input", input.to_str().unwrap(), "--order", "6"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"], "exact zero");
    assert_eq!(v["certified_order"], "6");
}

#[test]
fn verify_mirror_passes_at_tolerance() {
    let input = inputs_dir().join("p1.json");
    let out = run(&[
        "verify-mirror",
        "--input",
        input.to_str().unwrap(),
        "--q",
        "0.01",
        "--z",
        "1",
        "--tol",
        "1e-6",
        "--order",
        "12",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn schema_errors_exit_two() {
    let out = run(&["validate", "--input", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = std::env::temp_dir().join("toric_mirror_bad_input.json");
    std::fs::write(&dir, "{\"schema_version\": 99}").unwrap();
    let out = run(&["validate", "--input", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gram_csv_is_flat() {
    let input = inputs_dir().join("p1.json");
    let out = run(&["gram", "--input", input.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.trim().lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "1,2");
    assert_eq!(rows[1], "0,1");
}
