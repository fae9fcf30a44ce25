//! The `lab` binary: exit codes, overrides and output layout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).current_dir(cwd).env_remove("LAB_OUTPUT_ROOT").output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["list"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for p in ladlag_lab::lab::catalog() {
        assert!(text.contains(p.name), "{}", p.name);
    }
    assert_eq!(text, String::from_utf8(lab(&["list"], dir.path()).stdout).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bogus = write(d, "bogus.json", r#"{"preset": "bogus"}"#);
    assert_eq!(lab(&["run", &bogus], d).status.code(), Some(2));
    assert_eq!(lab(&["validate", &bogus], d).status.code(), Some(2));
    let unknown_key = write(d, "k.json", r#"{"preset": "ex0-fatou", "colour": 1}"#);
    assert_eq!(lab(&["validate", &unknown_key], d).status.code(), Some(2));
    assert_eq!(lab(&["validate", "missing.json"], d).status.code(), Some(2));

    let ok = write(d, "ok.json", r#"{"preset": "integration-ibp", "scenarios": 20, "params": {"brute_max_nodes": 4}}"#);
    assert_eq!(lab(&["validate", &ok], d).status.code(), Some(0));
    assert_eq!(lab(&["validate", &ok, "--seed", "0"], d).status.code(), Some(2));
    assert_eq!(lab(&["run", &ok], d).status.code(), Some(0));
    assert!(d.join("lab-output/integration-ibp/manifest.json").exists());

    // an impossible threshold makes a criterion fail
    let strict = write(d, "strict.json", r#"{"preset": "integration-ibp", "scenarios": 20, "thresholds": {"ibp_rel_tol": 0.0}}"#);
    assert_eq!(lab(&["run", &strict, "--output-dir", "strict"], d).status.code(), Some(1));

    // a 1/4 node is needed but the level-1 grid lacks it
    let coarse = write(d, "coarse.json", r#"{"preset": "limit-integral", "grid": {"dyadic_level": 1}, "scenarios": 10}"#);
    assert_eq!(lab(&["run", &coarse, "--output-dir", "coarse"], d).status.code(), Some(2));
}

#[test]
fn runtime_failure_is_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // the output directory cannot be created under a regular file
    fs::write(d.join("blocker"), "").unwrap();
    let cfg = write(d, "c.json", r#"{"preset": "integration-ibp", "scenarios": 5, "output_dir": "blocker/out"}"#);
    assert_eq!(lab(&["run", &cfg], d).status.code(), Some(3));
}

#[test]
fn flags_override_file_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "ex0.json", r#"{"preset": "ex0-fatou", "seed": 3, "scenarios": 400, "params": {"n_list": [2, 10, 100]}}"#);
    for (out, workers) in [("a", "1"), ("b", "2")] {
        let o = lab(&["run", &cfg, "--seed", "7", "--output-dir", out, "--workers", workers], d);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["scenarios"], 400);
    for f in manifest["files"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        if f.ends_with(".csv") {
            assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
        }
    }
    let b: serde_json::Value = serde_json::from_slice(&fs::read(d.join("b/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], b["config_hash"]);
}
