use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn codenames(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn returns(path: &Path) -> Vec<f64> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    serde_json::from_value(v["returns"].clone()).unwrap()
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("random.json");
    let csv = dir.path().join("random.csv");
    let o = codenames(&[
        "simulate",
        "--synthetic",
        "--policy",
        "random",
        "--episodes",
        "200",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = returns(&out);
    assert_eq!(r.len(), 200);
    assert!(r.iter().all(|x| *x <= 0.0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["policy"], "random");
    assert_eq!(report["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 201);
}

#[test]
fn exhaustive_index_reproduces_exact_search() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("clues.ivf");
    let o = codenames(&[
        "build-index",
        "--synthetic",
        "--partitions",
        "40",
        "--out",
        index.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let run = |extra: &[&str], name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--synthetic", "--episodes", "30", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = codenames(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        returns(&out)
    };
    let exact = run(&[], "exact.json");
    let full = run(&["--index", index.to_str().unwrap(), "--probes", "40"], "ivf.json");
    assert_eq!(exact, full);
}

#[test]
fn check_and_bad_input() {
    let o = codenames(&["check"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5, "{text}");

    let o = codenames(&["simulate", "--episodes", "1"]);
    assert!(!o.status.success());
    let o = codenames(&["simulate", "--synthetic", "--tau", "-1", "--guesser", "stochastic", "--episodes", "1"]);
    assert!(!o.status.success());
}

#[test]
fn stdio_server_round_trip() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_codenames"))
        .args(["serve", "--stdio", "--synthetic"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"{\"id\":1,\"cmd\":\"hello\"}\n{\"id\":2,\"cmd\":\"close\"}\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["payload"]["protocol_version"], 1);
}
