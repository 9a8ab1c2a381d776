//! The binary's exit codes and output streams.

use std::process::Command;

fn krlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_krlab")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn unknot_table() {
    let (code, out, _) = krlab(&["homology", "--braid", "", "--strands", "1", "--n", "2", "--xwindow", "10"]);
    assert_eq!(code, 0);
    assert!(out.contains("window x in [-1, 9]"));
    assert!(out.contains("tail: summed with 1/(1-ξ²)^1"));
}

#[test]
fn verdict_and_exit_codes() {
    let (code, out, _) = krlab(&["both", "--braid", "1 1 1", "--strands", "2", "--n", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict: MATCH"));
    let (code, _, err) = krlab(&["skein", "--braid", "s1^2"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
    let (code, _, _) = krlab(&["skein", "--n", "0"]);
    assert_ne!(code, 0);
}

#[test]
fn json_is_sorted_and_versioned() {
    let (code, out, _) = krlab(&["homology", "--braid", "-1", "--strands", "2", "--xwindow", "8", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "krlab/1");
    let keys: Vec<(i64, i64, i64)> = v["slices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["eps"].as_i64().unwrap(), s["i"].as_i64().unwrap(), s["x"].as_i64().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn verify_subset() {
    let (code, out, _) = krlab(&["verify", "--only", "1,7"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}
