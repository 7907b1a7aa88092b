use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_inspected-levy");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_SUITE: &str = r#"{
    "command": "verify",
    "seed": 3,
    "scenarios": [
        {"name": "pathwise", "check": "pathwise", "sample_size": 500},
        {"name": "transforms", "check": "transform_identity"},
        {"name": "pmf", "check": "geometric_pmf", "sample_size": 20000,
         "params": {"beta": 1.0, "omega": 2.0}},
        {"name": "sn_atom", "check": "sn_marginal", "sample_size": 20000,
         "model": {"kind": "brownian_drift", "drift": -1.0, "volatility": 1.0}}
    ]
}"#;

#[test]
fn moments_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = run(&["moments", "--model", "sp_cl", "--beta", "1", "--omega", "1"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    let mean = printed["mean_max"].as_f64().unwrap();
    assert!((mean - 0.1334371560).abs() < 1e-9);
    assert!(out.join("report.json").exists());
    let meta = read_json(&out.join("run_meta.json"));
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"command\": \"verify\", \"seed\": }").unwrap();
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    fs::write(&cfg, "{\"command\": \"moments\", \"beta\": -1}").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
    fs::write(&cfg, "{\"command\": \"moments\", \"colour\": 1}").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn verify_config_writes_report_and_is_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    fs::write(&cfg, SMALL_SUITE).unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = run(&["--config", cfg.to_str().unwrap(), "--threads", threads], &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let parsed: Value = serde_json::from_slice(&reports[0]).unwrap();
    let names: Vec<&str> = parsed.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["pathwise", "pmf", "sn_atom", "transforms"]);
    assert!(parsed.as_array().unwrap().iter().all(|r| r["seed"] == 3));
}

#[test]
fn statistical_scenario_below_minimum_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(
        &cfg,
        r#"{"command": "verify", "scenarios": [{"name": "x", "check": "theorem1", "sample_size": 10}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn lindley_sequence_and_transforms_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l");
    let o = run(&["lindley", "--sequence", "3,-5,2,2,-1"], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("samples_lindley.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[2], 3.0);
    assert_eq!(fields[2], fields[3]);

    let out = dir.path().join("t");
    let o = run(&["transforms", "--model", "sn_bm", "--alpha", "0,1", "--gamma", "0,2"], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("samples_transforms.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn simulate_writes_both_sample_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = run(&["--seed", "7", "simulate", "-n", "200"], &out);
    assert_eq!(o.status.code(), Some(0));
    for f in ["samples_continuous.csv", "samples_inspected.csv", "report.json", "run_meta.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let rows = fs::read_to_string(out.join("samples_inspected.csv")).unwrap();
    assert_eq!(rows.lines().count(), 201);
}
