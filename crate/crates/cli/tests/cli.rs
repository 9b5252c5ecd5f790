use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mrlcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrlcd")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn singularity_anchor_on_stdout() {
    let out = mrlcd(&["singularity-exact", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["experiment"], "singularity-exact");
    assert_eq!(r["violations"], 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 5, "trials": 7, "master_seed": 3}"#);
    let out = mrlcd(&["decouple", "--config", &cfg, "--trials", "4", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["config"]["n"], 5);
    assert_eq!(r["config"]["trials"], 4);
    assert_eq!(r["config"]["master_seed"], 9);
}

#[test]
fn out_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tail.json");
    let out = mrlcd(&["sval-tail", "--n", "4", "--trials", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["table"].as_array().unwrap().len(), 17);
    let csv = std::fs::read_to_string(path.with_extension("csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("probability"));
    assert_eq!(csv.lines().count(), 18);
}

#[test]
fn serial_and_parallel_reports_match() {
    let run = |extra: &[&str]| {
        let mut args = vec!["denominator", "--n", "10", "--trials", "40", "--seed", "5"];
        args.extend_from_slice(extra);
        let mut r = report(&mrlcd(&args));
        r["wall_clock_seconds"] = Value::from(0.0);
        r
    };
    assert_eq!(run(&[]), run(&["--serial"]));
}

#[test]
fn lcd_of_basis_vector() {
    let out = mrlcd(&["lcd", "--vector", "0,-3,0", "--L", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let s = &report(&out)["summary"];
    assert!(s["lo"].as_f64().unwrap() <= 2.0 && 2.0 <= s["hi"].as_f64().unwrap());
}

#[test]
fn threshold_median_flag() {
    let out = mrlcd(&["threshold", "--n", "64", "--lambda", "0.0625", "--median"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["records"].as_array().unwrap().len() > 1);
    assert!(r["summary"]["threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn uncertified_rounding_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"vector": [0.5, 0.5, 0.5], "constants": {"c_upper": 1e-9, "c_lower": 1.0}, "max_attempts": 3}"#,
    );
    let out = mrlcd(&["round", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["summary"]["certified"], 0.0);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"bogus": 1}"#);
    assert_eq!(mrlcd(&["lcd", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(mrlcd(&["replace", "--n", "6", "--p", "0.2"]).status.code(), Some(2));
    assert_eq!(mrlcd(&["sval-tail", "--law", "nonsense"]).status.code(), Some(2));
    assert_eq!(mrlcd(&["sval-tail", "--K", "0.5"]).status.code(), Some(2));
}

#[test]
fn capacity_errors_exit_three() {
    assert_eq!(mrlcd(&["singularity-exact", "--n", "6"]).status.code(), Some(3));
    assert_eq!(mrlcd(&["decouple", "--n", "9"]).status.code(), Some(3));
}
