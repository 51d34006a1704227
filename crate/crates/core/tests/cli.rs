use std::io::Write;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use diffsum::session::{read_log, replay, SessionStatus};

fn diffsum(args: &[&str], stdin: &str, cwd: &Path) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_diffsum"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path, n: usize) {
    let mut text = String::from("ballot_id\n");
    for i in 0..n {
        text.push_str(&format!("b{i:05}\n"));
    }
    std::fs::write(dir.join("manifest.csv"), text).unwrap();
}

#[test]
fn plan_reports_c_risk_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffsum(&["plan", "--n", "50000", "--delta", "2", "--margin", "0.20", "--format", "json"], "", dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["c"], 7);
    assert_eq!(v["d"], 5);
    assert_eq!(v["max_error_rate"], 0.10);
    assert_eq!(v["diffsum_expected_size"], 175.0);
    assert!((v["bravo_expected_size"].as_f64().unwrap() - 115.13).abs() < 0.01);

    let o = diffsum(&["plan", "--n", "9", "--delta", "0"], "", dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("c = 1"));
    assert!(stdout(&o).contains("22%"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    std::fs::write(
        dir.path().join("zero.json"),
        r#"{"n": 100, "truth": {"kind": "margin", "margin": 0.0}, "rule": {"rule": "diffsum", "c": 3}, "trials": 0}"#,
    )
    .unwrap();
    for args in [
        &["plan", "--n", "0", "--delta", "1"][..],
        &["plan", "--n", "10", "--delta", "5"],
        &["plan", "--n", "10"],
        &["simulate", "--trials", "0", "--n", "100", "--c", "3"],
        &["simulate", "--config", "bad.json"],
        &["simulate", "--config", "zero.json"],
        &["simulate", "--config", "missing.json"],
        &["simulate", "--n", "101", "--c", "3"],
        &["audit", "--manifest", "missing.csv", "--candidates", "A,B"],
        &["frobnicate"],
    ] {
        let o = diffsum(args, "", dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "11", "simulate", "--n", "50000", "--margin", "0.2", "--c", "7", "--trials", "500"];
    let a = diffsum(&args, "", dir.path());
    let b = diffsum(&args, "", dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["config"]["master_seed"], 11);
    assert!(report.get("elapsed_seconds").is_none_or(|v| v.is_null()));

    let o = diffsum(
        &["simulate", "--n", "1000", "--c", "4", "--trials", "50", "--format", "csv", "--output", "r.csv"],
        "",
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("n,rule,params,trials,rate,ci_low,ci_high,mean_size,median,p90,full_count_rate\n"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn small_tables_are_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = diffsum(&["reproduce-table", "--trials", "100", "--n", "1000"], "", dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].ends_with(",verdict"));
    assert!(lines.iter().any(|l| l.ends_with(",inconclusive")));
    let again = diffsum(&["reproduce-table", "--trials", "100", "--n", "1000"], "", dir.path());
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn terminal_audit_accepts_quits_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    manifest(dir.path(), 50_000);
    let base = ["audit", "--manifest", "manifest.csv", "--candidates", "A,B", "--delta", "2"];

    let input = "B\nB\nB\nB\n".to_string() + &"A\n".repeat(20);
    let o = diffsum(&[&base[..], &["--log", "one.jsonl"]].concat(), &input, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("(a-b)^2 = 256  c(a+b) = 168"), "{out}");
    assert!(out.trim_end().ends_with("AcceptOutcome(A)"), "{out}");
    let events = read_log(dir.path().join("one.jsonl")).unwrap();
    assert!(matches!(replay(&events).unwrap().status(), SessionStatus::Decided { .. }));

    // interrupted after ten entries, then resumed
    let o = diffsum(&[&base[..], &["--log", "two.jsonl"]].concat(), &"A\n".repeat(10), dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("session left open"));
    let before = replay(&read_log(dir.path().join("two.jsonl")).unwrap()).unwrap().status_view();
    let o = diffsum(&["audit", "--resume", "two.jsonl"], "status\nquit\n", dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("session closed"));
    let after = replay(&read_log(dir.path().join("two.jsonl")).unwrap()).unwrap();
    let view = after.status_view();
    assert_eq!((view.counts, view.total_drawn), (before.counts, before.total_drawn));
    assert!(matches!(after.status(), SessionStatus::Closed { .. }));

    // a log from the terminal is accepted by the service store
    let store = diffsum::session::SessionStore::open(dir.path()).unwrap();
    assert_eq!(store.session_ids().len(), 2);
}

#[test]
fn audit_rejects_bad_input_without_losing_state() {
    let dir = tempfile::tempdir().unwrap();
    manifest(dir.path(), 200);
    let o = diffsum(
        &["audit", "--manifest", "manifest.csv", "--candidates", "A,B", "--c", "3", "--log", "x.jsonl"],
        "Z\nnope A\nA\n",
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("rejected:").count(), 2, "{out}");
    let s = replay(&read_log(dir.path().join("x.jsonl")).unwrap()).unwrap();
    assert_eq!(s.tally().total_drawn, 1);

    let o = diffsum(&["audit", "--manifest", "manifest.csv", "--candidates", "A,B", "--n", "12"], "", dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serve_reports_a_busy_port() {
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = diffsum(&["serve", "--bind", &addr, "--data-dir", "data"], "", dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot bind"));
}
