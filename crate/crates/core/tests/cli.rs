use std::process::{Command, Output};

use multivote::cli::solve_json;
use multivote::constructions::{egal_free_ride_example, running_example};
use multivote::{solve, SolverBudget};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multivote"))
        .args(args)
        .env_remove("MULTIVOTE_BUDGET")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn running_json() -> String {
    running_example().election.to_json()
}

#[test]
fn solve_running_example_with_pav() {
    let e = running_json();
    let out = run(&["solve", "--rule", "thiele:pav@opt", "--json", &e]);
    let v = json(&out);
    assert_eq!(v["outcome"], serde_json::json!(["a", "a", "a", "b"]));
    assert_eq!(v["score"], "154");
    // same bytes as the library call
    let f = running_example();
    let r = solve(&f.election, &"thiele:pav@opt".parse().unwrap(), &SolverBudget::default()).unwrap();
    assert_eq!(v, solve_json(&f.election, &"thiele:pav@opt".parse().unwrap(), &r));
}

#[test]
fn solve_from_file_and_sequential_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    std::fs::write(&path, running_json()).unwrap();
    let v = json(&run(&["solve", "--rule", "thiele:pav@seq", "--input", path.to_str().unwrap()]));
    assert_eq!(v["outcome"], serde_json::json!(["a", "a", "b", "a"]));
    assert_eq!(v["trace"].as_array().unwrap().len(), 4);
}

#[test]
fn output_is_deterministic() {
    let e = running_json();
    for args in [
        vec!["solve", "--rule", "owa:leximin", "--json", &e],
        vec!["audit", "--rule", "thiele:pav@seq", "--json", &e],
    ] {
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}

#[test]
fn winner_query() {
    let e = running_json();
    let ask = |issue: &str, c: &str| stdout(&run(&["winner", "--rule", "thiele:pav", "--json", &e, "--issue", issue, "--candidate", c]));
    assert_eq!(ask("3", "b"), "true\n");
    assert_eq!(ask("3", "a"), "false\n");
    assert_eq!(ask("0", "0"), "true\n");
    assert_eq!(run(&["winner", "--rule", "thiele:pav", "--json", &e, "--issue", "0", "--candidate", "q"]).status.code(), Some(1));
}

#[test]
fn freeride_on_egalitarian_example() {
    let e = egal_free_ride_example().election.to_json();
    let v = json(&run(&["freeride", "--rule", "owa:egal@opt", "--voter", "1", "--issue", "0", "--json", &e]));
    let findings = v["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["class"], "successful");
    assert_eq!(findings[0]["deviated"], serde_json::json!([0, 1]));

    let v = json(&run(&["freeride", "--rule", "owa:egal@opt", "--voter", "1", "--json", &e]));
    assert_eq!(v["manipulation"]["class"], "successful");
}

#[test]
fn audit_report_shape() {
    let e = running_json();
    let v = json(&run(&["audit", "--rule", "thiele:pav@seq", "--json", &e]));
    assert_eq!(v["rule"], "thiele:pav@seq");
    assert_eq!(v["pairs"].as_array().unwrap().len(), 400);
}

#[test]
fn simulate_utilitarian_row_is_zero() {
    let out = run(&["simulate", "--seed", "42", "--elections", "10", "--rules", "thiele:pow:0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "family,x,q1,q2,q3,elections,eligible_voters\nthiele,0,0,0,0,10,0\n");
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let out = run(&[
        "simulate", "--seed", "3", "--elections", "4", "--voters", "6", "--issues", "5", "--rules",
        "thiele:pav,owa:leximin", "--out", &p("m.csv"), "--svg", &p("m.svg"), "--raw", &p("m.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(p("m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("\nowa,5,"));
    assert!(std::fs::read_to_string(p("m.svg")).unwrap().starts_with("<svg"));
    assert_eq!(std::fs::read_to_string(p("m.jsonl")).unwrap().lines().count(), 4 * 2 * 6);
}

#[test]
fn fixtures_dump() {
    let list = stdout(&run(&["fixture", "--list"]));
    assert!(list.lines().any(|l| l == "seq-egal-harmful"));
    let v = json(&run(&["fixture", "seq-egal-harmful"]));
    assert_eq!(v["expected_truthful"], serde_json::json!(["a", "a", "a", "b", "b"]));
    assert_eq!(v["expected_class"], "harmful");
    assert_eq!(run(&["fixture", "unknown"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let e = running_json();
    for args in [
        vec!["solve", "--rule", "thiele:pav"],
        vec!["solve", "--rule", "thiele:pav", "--json", &e, "--input", "x.json"],
        vec!["solve", "--rule", "thiele:bogus", "--json", &e],
        vec!["solve", "--json", &e],
        vec!["frobnicate"],
        vec!["simulate", "--rules", "owa:egal:3"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_one() {
    let bad = r#"{"issues":[{"candidates":["a"]}],"voters":1,"approvals":[[[3]]]}"#;
    let out = run(&["solve", "--rule", "thiele:pav", "--json", bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["solve", "--rule", "thiele:pav", "--json", "{"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--rule", "thiele:pav", "--input", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--rules", "owa:egal"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--slack", "0.5", "--elections", "1"]).status.code(), Some(1));
}

#[test]
fn budget_override_from_environment() {
    let e = running_json();
    let out = Command::new(env!("CARGO_BIN_EXE_multivote"))
        .args(["solve", "--rule", "thiele:pav@opt", "--json", &e])
        .env("MULTIVOTE_BUDGET", "80")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("81") && err.contains("80"), "{err}");
    // sequential rules do not enumerate outcomes
    let out = Command::new(env!("CARGO_BIN_EXE_multivote"))
        .args(["solve", "--rule", "thiele:pav@seq", "--json", &e])
        .env("MULTIVOTE_BUDGET", "80")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
