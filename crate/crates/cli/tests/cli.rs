use std::process::{Command, Output};

use serde_json::Value;

fn qcnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcnc")).args(args).output().expect("qcnc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("qcnc-{}-{name}", std::process::id()))
}

#[test]
fn verify_algebra_passes_and_echoes_the_seed() {
    let out = qcnc(&["verify", "--suite", "algebra", "--n", "1", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.starts_with("seed: 42"));
    assert!(s.contains("PASS"));
}

#[test]
fn invalid_dimension_is_a_usage_error() {
    assert_eq!(qcnc(&["verify", "--suite", "all", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qcnc(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(qcnc(&["verify", "--suite", "invar", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn json_report_has_command_config_checks_and_seed() {
    let path = temp("report.json");
    let out = qcnc(&["verify", "--suite", "curv", "--n", "1", "--seed", "7", "--scalar", "f64", "--json-out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["config"]["scalar"], "f64");
    assert_eq!(v["pass"], true);
    assert!(v["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert!(!v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn flat_geodesic_is_a_straight_line() {
    let trace = temp("trace.csv");
    let out = qcnc(&["geodesic", "--x", "1,0,0,0,0,0,0", "--s", "2", "--trace", trace.to_str().unwrap(), "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("gamma(s) = [2.000000000000e0, 0.000000000000e0"));
    let csv = std::fs::read_to_string(&trace).unwrap();
    std::fs::remove_file(&trace).ok();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("s,z0,"));
}

#[test]
fn malformed_connection_reports_the_line() {
    let path = temp("bad.json");
    std::fs::write(&path, "{\"dim\": 7,\n \"gamma\": [\n").unwrap();
    let out = qcnc(&["geodesic", "--connection", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn wrong_vector_length_is_a_usage_error() {
    assert_eq!(qcnc(&["geodesic", "--x", "1,0"]).status.code(), Some(2));
}

#[test]
fn normalize_rejects_order_below_two() {
    assert_eq!(qcnc(&["normalize", "--N", "1"]).status.code(), Some(2));
}

#[test]
fn zero_jets_give_zero_factor_and_full_vanishing_list() {
    let out = qcnc(&["normalize", "--N", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    for m in 2..=4 {
        assert!(s.contains(&format!("u_{m} = 0")));
    }
    assert_eq!(s.lines().filter(|l| l.starts_with("vanishes:")).count(), 18);
}

#[test]
fn flat_oracle_recovers_the_seed_factor() {
    let out = qcnc(&["normalize", "--oracle", "flat", "--N", "3", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pass: symmetrized jets vanish through order 3"));
}

#[test]
fn lm_spectrum_kernel_and_invertibility() {
    let out = qcnc(&["poly", "lm-spectrum", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.contains("rank 10"));
    assert_eq!(s.lines().filter(|l| l.starts_with("kernel:")).count(), 3);
    let out = qcnc(&["poly", "lm-spectrum", "--m", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("det = "));
}

#[test]
fn invar_reduce_prints_exact_constants() {
    let out = qcnc(&["invar", "reduce", "--n", "1", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.contains("pass: reduction cross: 1/2"));
    assert!(s.contains("pass: reduction acs4-a: 9"));
}
