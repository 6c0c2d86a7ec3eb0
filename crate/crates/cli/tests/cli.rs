use std::process::{Command, Output};

use bellbound::bell::{BellFunctional, Scenario};
use serde_json::Value;

fn bellbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellbound"))
        .args(args)
        .env("BELLBOUND_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn num(v: &Value, key: &str) -> f64 {
    v["results"][key].as_f64().unwrap_or_else(|| panic!("missing {key}: {v}"))
}

#[test]
fn verify_state_passes_by_default() {
    let out = bellbound(&["verify-state"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(num(&r, "pt_invariance_dev") <= 1e-12);
    let eig = r["results"]["nonzero_eigenvalues"].as_array().unwrap();
    let expect = [27.0 / 6884.0, 450.0 / 1721.0, 450.0 / 1721.0, 3257.0 / 6884.0];
    assert_eq!(eig.len(), 4);
    for (a, b) in eig.iter().zip(expect) {
        assert!((a.as_f64().unwrap() - b).abs() <= 1e-12);
    }
}

#[test]
fn unreachable_tolerance_fails_the_check() {
    let out = bellbound(&["verify-state", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["passed"], Value::Bool(false));
}

#[test]
fn violation_report() {
    let out = bellbound(&["violation"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(num(&r, "difference").abs() <= 1e-12);
    assert_eq!(num(&r, "local_bound"), 0.0);
    assert!(num(&r, "violation") > 1e-4);
}

#[test]
fn floats_carry_seventeen_digits_and_round_trip() {
    let out = bellbound(&["violation"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.contains("\"local_bound\": 0.0000000000000000e0"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn malformed_functional_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"scenario\": ").unwrap();
    let out = bellbound(&["local-bound", "--functional", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = bellbound(&["seesaw", "--functional", "/nonexistent/f.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_are_input_errors() {
    assert_eq!(bellbound(&["upper-bound", "--level", "7"]).status.code(), Some(2));
    assert_eq!(bellbound(&["seesaw", "--dim", "9"]).status.code(), Some(2));
    assert_eq!(bellbound(&["randomness", "--setting", "5"]).status.code(), Some(2));
}

#[test]
fn local_bound_of_a_file_functional() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chsh.json");
    std::fs::write(&path, BellFunctional::chsh().to_json()).unwrap();
    let out = bellbound(&["local-bound", "--functional", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(num(&report(&out), "local_bound"), 2.0);
}

#[test]
fn warm_seesaw_writes_its_result() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.json");
    let out = bellbound(&["seesaw", "--warm-start", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(num(&r, "best_value") >= 2.6314e-4);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["best_value"], r["results"]["best_value"]);
    assert_eq!(written["alice"].as_array().unwrap().len(), 3);
}

#[test]
fn zero_functional_seesaw_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    std::fs::write(&path, BellFunctional::zero(Scenario::counterexample()).to_json()).unwrap();
    let out = bellbound(&["seesaw", "--seed", "3", "--functional", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(num(&r, "best_value").abs() <= 1e-9);
    assert_eq!(r["inputs"]["seed"], 3);
}

#[test]
fn upper_bound_level_one() {
    let out = bellbound(&["upper-bound", "--level", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(num(&r, "bound") >= 2.63144e-4);
    assert!((num(&r, "tsirelson_check") - 2.0 * 2f64.sqrt()).abs() <= 1e-7);
}

#[test]
fn randomness_setting_one() {
    let out = bellbound(&["randomness", "--setting", "1", "--level", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(num(&r, "h_min") <= 3.6191e-4 + 5e-6);
    assert!(num(&r, "p_guess") <= 1.0 + 1e-7);
}

#[test]
fn robustness_is_positive() {
    let out = bellbound(&["robustness"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(num(&report(&out), "eps_star") > 0.0);
}
