//! End-to-end runs of the `bolza` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bolza(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bolza"))
        .args(args)
        .env("BOLZA_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn constants_from_raw_values() {
    let out = bolza(&["constants", "--B", "2", "--alpha", "2", "--d", "0", "--T", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    assert!((v["c_t_B"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["R"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["phi_B"].as_f64().unwrap() >= 0.0);
}

#[test]
fn unknown_verb_is_a_usage_error() {
    let out = bolza(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_model_reports_json_error() {
    let out = bolza(&[
        "check-growth",
        "--model",
        "no_such_model",
        "--condition",
        "H",
        "--coarse",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = json(&out.stderr);
    assert!(err["error"].is_string());
    assert!(err["message"].as_str().unwrap().contains("no_such_model"));
}

fn run_reparam(dir: &Path) -> Output {
    bolza(&[
        "reparam",
        "--problem",
        &data("worked_example/problem.json"),
        "--pair",
        &data("worked_example/pair.json"),
        "--overrides",
        &data("worked_example/overrides.json"),
        "--coarse",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn reparam_worked_example_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run_reparam(dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["pair_out.json", "certificate.json", "trajectory.csv"] {
        let (x, y) = (
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
        );
        assert_eq!(x, y, "{name} differs between runs");
    }
    let cert = json(&fs::read(a.path().join("certificate.json")).unwrap());
    assert!((cert["cost_before"].as_f64().unwrap() - 1.720759).abs() < 1e-6);
    assert!((cert["cost_after"].as_f64().unwrap() - 1.618034).abs() < 1e-6);
    let pair = json(&fs::read(a.path().join("pair_out.json")).unwrap());
    let grid = pair["grid"].as_array().unwrap();
    assert_eq!(grid.last().unwrap().as_f64(), Some(1.0));

    let manifest = json(&fs::read(a.path().join("manifest.json")).unwrap());
    assert_eq!(manifest["command"][0], "reparam");
    assert_eq!(manifest["input_digests"].as_object().unwrap().len(), 3);
    for digest in manifest["input_digests"].as_object().unwrap().values() {
        assert_eq!(digest.as_str().unwrap().len(), 64);
    }
}

#[test]
fn goldens_pass() {
    let out = bolza(&["goldens"]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}");
    assert!(!table.contains("FAIL"));
}

#[test]
fn lavrentiev_on_minimal_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: PathBuf = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"grid_ladder": [8, 16], "control_bound_ladder": [2.0, 4.0], "restarts": 0}"#,
    )
    .unwrap();
    let out = bolza(&[
        "lavrentiev",
        "--problem",
        &data("lavrentiev/minimal_length.json"),
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&fs::read(dir.path().join("gap_report.json")).unwrap());
    assert_eq!(report["verdict"], "NoGapDetected");
    let inf = report["bounded_inf"].as_f64().unwrap();
    assert!((inf - 2f64.sqrt()).abs() < 1e-6, "bounded inf {inf}");

    let mut rows = csv::Reader::from_path(dir.path().join("lattice.csv")).unwrap();
    assert_eq!(rows.records().count(), 4);
}

#[test]
fn bad_config_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"grid_ladder": []}"#).unwrap();
    let out = bolza(&[
        "minimize",
        "--problem",
        &data("lavrentiev/minimal_length.json"),
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out.stderr)["error"].is_string());
}
