//! Runs the `records` binary end to end.

use std::process::{Command, Output};

use records_core::cli::{EXIT_INVALID, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

fn records(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_records"));
    cmd.args(args).env_remove("RECORDS_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    records(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exact_prints_csv() {
    let out = run(&["exact", "--formula", "pstar", "--n", "2,3", "--d", "3"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("formula,n,d,a,k,value"));
    assert_eq!(lines.next(), Some("pstar,2,3,,,0.875"));
    assert!(lines.next().unwrap().starts_with("pstar,3,3,"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(EXIT_USAGE));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(run(&["--version"]).status.code(), Some(EXIT_OK));
    let bad = run(&["exact", "--formula", "pdir", "--n", "3", "--d", "2", "--a", "-1"]);
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
    let violated = run(&[
        "check", "--check", "nuod", "--family", "pa", "--d", "2", "--a", "1", "--samples", "100000",
    ]);
    assert_eq!(violated.status.code(), Some(EXIT_VIOLATION), "{}", String::from_utf8_lossy(&violated.stderr));
}

#[test]
fn seed_from_environment() {
    let args = ["simulate", "--family", "pa", "--d", "2", "--a", "1", "--n", "4", "--reps", "2000"];
    let env = records(&args).env("RECORDS_SEED", "17").output().unwrap();
    let flag = run(&[&args[..], &["--seed", "17"]].concat());
    let other = run(&[&args[..], &["--seed", "18"]].concat());
    assert_eq!(env.stdout, flag.stdout);
    assert_ne!(env.stdout, other.stdout);
    assert!(stdout(&env).lines().nth(1).unwrap().contains(",17,"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["sweep", "--family", "dir", "--a-grid", "0.5:5:3", "--n", "6", "--with-mc", "--reps", "5000", "--seed", "3"];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(EXIT_OK));
    assert_eq!(first.stdout, run(&args).stdout);
    assert_eq!(stdout(&first).lines().count(), 4);
}

#[test]
fn out_file_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.json");
    let traj = dir.path().join("traj.csv");
    let status = run(&[
        "simulate", "--family", "iid-exp", "--d", "2", "--n", "50", "--reps", "1000", "--out", "json",
        "--out-file", out.to_str().unwrap(), "--emit-trajectory", traj.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert!(status.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["wall_time_secs"].as_f64().unwrap() >= 0.0);
    let traj = std::fs::read_to_string(&traj).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("step,is_record,broken,r_n"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn check_writes_json() {
    let out = run(&["check", "--check", "limits", "--family", "pa", "--d", "2", "--n", "5"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["schema_version"], 1);
}
