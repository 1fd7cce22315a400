use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sembn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sembn"))
        .args(args)
        .current_dir(cwd)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn simulate(dir: &Path) {
    let out = sembn(&["simulate", "sim", "--rows", "600", "--incomplete", "100", "--seed", "4"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_artifacts_and_reruns_from_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let a = sembn(&["run", "sim/config.toml", "--out", "a"], tmp.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = sembn(&["run", "a/manifest.json", "--out", "b"], tmp.path());
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    for name in sembn::pipeline::ARTIFACTS {
        let x = fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let manifest = fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("2023-11-14T22:13:20Z"));
}

#[test]
fn default_output_dir_is_relative_to_config() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let out = sembn(&["run", "sim/config.toml", "--seed", "3"], tmp.path());
    assert!(out.status.success());
    assert!(tmp.path().join("sim/out/manifest.json").exists());
}

#[test]
fn validate_and_compare_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let v = sembn(&["validate", "sim/config.toml"], tmp.path());
    assert!(v.status.success());
    let report: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(report["rows_ingested"], 600);
    assert_eq!(report["rows_complete"], 500);
    assert_eq!(report["train"], 350);
    let c = sembn(&["compare", "sim/config.toml", "--out", "cmp"], tmp.path());
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    assert!(tmp.path().join("cmp/comparison.json").exists());
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let config = fs::read_to_string(tmp.path().join("sim/config.toml")).unwrap();

    fs::write(tmp.path().join("sim/bad_key.toml"), format!("{config}\n[extra]\nx = 1\n")).unwrap();
    let out = sembn(&["run", "sim/bad_key.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `config`"));

    fs::write(
        tmp.path().join("sim/no_data.toml"),
        config.replace("path = \"data.csv\"", "path = \"gone.csv\""),
    )
    .unwrap();
    let out = sembn(&["run", "sim/no_data.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `ingest`"));

    let out = sembn(&["validate", "sim/missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_sample_is_a_data_failure() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path());
    let data = fs::read_to_string(tmp.path().join("sim/data.csv")).unwrap();
    let mut lines = data.lines();
    let header = lines.next().unwrap();
    let first = lines.find(|l| !l.contains("NA") && !l.split(',').any(str::is_empty)).unwrap();
    let mut copies = vec![header.to_string()];
    for i in 0..80 {
        let mut cells: Vec<&str> = first.split(',').collect();
        let id = format!("c{i}");
        cells[0] = &id;
        copies.push(cells.join(","));
    }
    fs::write(tmp.path().join("sim/data.csv"), copies.join("\n") + "\n").unwrap();
    let out = sembn(&["run", "sim/config.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `sem_fit`"));
    assert!(!tmp.path().join("sim/out").exists());
}
