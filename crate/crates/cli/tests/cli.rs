//! Exit codes and basic output of the binary.

use std::fs;
use std::process::Command;

fn binfar(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_binfar"))
        .args(args)
        .env_remove("BINFAR_THREADS")
        .output()
        .unwrap()
}

#[test]
fn roc_prints_auc_and_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let l = dir.path().join("l.csv");
    fs::write(&s, "score\n0.9\n0.8\n0.7\n0.1\n").unwrap();
    fs::write(&l, "1\n0\n1\n0\n").unwrap();
    let out = dir.path().join("out");
    let o = binfar(&["roc", "--scores", s.to_str().unwrap(), "--labels", l.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "auc 0.75");
    for f in ["roc.csv", "roc.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "roc");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_invocations_exit_with_two() {
    assert_eq!(binfar(&["simulate", "--example", "3", "--dgp", "1", "--n", "50", "--t", "50", "--out", "x"]).status.code(), Some(2));
    assert_eq!(binfar(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(binfar(&["--threads", "0", "roc", "--scores", "a", "--labels", "b"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let l = dir.path().join("l.csv");
    fs::write(&s, "0.1\n0.2\n").unwrap();
    fs::write(&l, "1\n1\n").unwrap();
    let o = binfar(&["roc", "--scores", s.to_str().unwrap(), "--labels", l.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());
}

#[test]
fn help_and_version_succeed() {
    assert!(binfar(&["--help"]).status.success());
    assert!(binfar(&["--version"]).status.success());
}
