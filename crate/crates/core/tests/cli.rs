use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arpfb"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--scenario", "closed-loop", "--seed", "9", "--config"])
        .arg(config("closed_loop.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["trace.csv", "record.json", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["final_majority"], serde_json::json!({"f": 2, "mf": 1}));
    assert_eq!(summary["seed"], 9);
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--scenario", "monte_carlo", "--trials", "3", "--engine", "lz", "--config"])
        .arg(config("monte_carlo.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn every_shipped_config_validates() {
    for entry in fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg("--config").arg(&path).output().unwrap();
        assert!(out.status.success(), "{}", path.display());
    }
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sweep": {"rate_mhz_per_ms": -0.3, "spam": 1}}"#).unwrap();
    let out = bin().arg("validate").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, r#"{"field": {"fixed": 7.0}}"#).unwrap();
    let out = bin()
        .args(["run", "--scenario", "closed-loop", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
