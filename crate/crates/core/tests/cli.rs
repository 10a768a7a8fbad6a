use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haar-greedy"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn temp_file(suffix: &str, body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn csv_example_reports_equal_errors() {
    let f = temp_file(".csv", "# four cells\n4\n2\n1\n1\n");
    let out = run(&[
        "--input",
        f.path().to_str().unwrap(),
        "--d",
        "1",
        "--p",
        "2",
        "--m",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let g = v["greedy_error"].as_f64().unwrap();
    let s = v["sigma_m"].as_f64().unwrap();
    assert!((g - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((s - g).abs() < 1e-12);
    assert_eq!(v["holds"], Value::Bool(true));
    assert_eq!(v["input"]["J"], 2);
}

#[test]
fn json_input_matches_csv_input() {
    let csv = temp_file(".csv", "1\n-2\n0.5\n3\n");
    let js = temp_file(".json", r#"{"d": 1, "J": 2, "values": [1, -2, 0.5, 3]}"#);
    let a = json(&run(&[
        "--input",
        csv.path().to_str().unwrap(),
        "--d",
        "1",
        "--p",
        "1.5",
        "--m",
        "2",
    ]));
    let b = json(&run(&[
        "--input",
        js.path().to_str().unwrap(),
        "--p",
        "1.5",
        "--m",
        "2",
    ]));
    for key in ["greedy_error", "sigma_m", "ratio", "selected_support", "oracle_support"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}

#[test]
fn full_support_has_zero_error_and_no_ratio() {
    let f = temp_file(".json", r#"{"d": 1, "J": 2, "values": [4, 2, 1, 1]}"#);
    let v = json(&run(&["--input", f.path().to_str().unwrap(), "--p", "3", "--m", "4"]));
    assert_eq!(v["greedy_error"].as_f64(), Some(0.0));
    assert_eq!(v["sigma_m"].as_f64(), Some(0.0));
    assert!(v["ratio"].is_null());
}

#[test]
fn output_is_reproducible_across_runs_and_threads() {
    let args = ["--d", "2", "--level", "2", "--seed", "5", "--p", "1.5", "--m", "3"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, run(&args).stdout);
    let mut serial = args.to_vec();
    serial.extend(["--threads", "1"]);
    assert_eq!(a.stdout, run(&serial).stdout);
    let mut four = args.to_vec();
    four.extend(["--threads", "4"]);
    assert_eq!(a.stdout, run(&four).stdout);
}

#[test]
fn suite_output_is_reproducible() {
    let args = ["--suite", "theorem1", "--trials", "20", "--seed", "3"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    let mut serial = args.to_vec();
    serial.extend(["--threads", "1"]);
    assert_eq!(a.stdout, run(&serial).stdout);
}

#[test]
fn oracle_cap_exits_three() {
    let out = run(&["--d", "2", "--level", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    let ok = run(&["--d", "2", "--level", "3", "--m", "2", "--no-oracle"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(json(&ok)["sigma_m"].is_null());
}

#[test]
fn malformed_input_exits_two() {
    let bad = temp_file(".json", r#"{"d": 1, "J": 2, "values": [1, 2, 3]}"#);
    assert_eq!(run(&["--input", bad.path().to_str().unwrap()]).status.code(), Some(2));
    let odd = temp_file(".csv", "1\n2\n3\n");
    assert_eq!(
        run(&["--input", odd.path().to_str().unwrap(), "--d", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["--level", "2", "--p", "1"]).status.code(), Some(2));
    assert_eq!(run(&["--level", "2", "--m", "9"]).status.code(), Some(2));
    assert_eq!(run(&["--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn empty_suite_passes() {
    let out = run(&["--suite", "lemma1", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["checks"], 0);
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn martingale_suite_reports_counterexample() {
    let out = run(&["--suite", "martingale", "--trials", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let conds = v["extras"]["counterexample"]["conditionals"].as_array().unwrap();
    assert!(!conds.is_empty());
    assert!(conds.iter().all(|c| c["expectation"].as_f64() == Some(1.0)));
}

#[test]
fn suite_violation_exits_one() {
    // Draws with p close to 1 at d = 2 break the stated lower bound.
    let out = run(&["--suite", "lemma23", "--trials", "200", "--seed", "20240601"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(false));
    assert!(v["violation_count"].as_u64().unwrap() > 0);
}
