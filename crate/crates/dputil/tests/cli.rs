use std::path::Path;
use std::process::{Command, Output};

fn dputil(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dputil"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DPUTIL_OUT_DIR")
        .output()
        .unwrap()
}

const CONFIG: &str = r#"{
    "dataset": { "csv": { "path": "data.csv", "class_count": 2 } },
    "arch": "lr",
    "train": { "epochs": 5 },
    "mechanisms": ["output", "prediction"],
    "epsilons": [0.1, 10],
    "attack": { "shadows": 2, "forest": { "trees": 5 } }
}"#;

#[test]
fn synth_sweep_report_attack() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = dputil(&["synth", "--n", "300", "--d", "4", "--seed", "3", "--out", "data.csv"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(p.join("cfg.json"), CONFIG).unwrap();

    let out = dputil(&["sweep", "cfg.json", "--seed", "1", "--seed", "2", "--out", "res"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(p.join("res/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);

    let out = dputil(&["report", "res"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svgs = std::fs::read_dir(p.join("res"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 3);

    let out = dputil(&["train", "cfg.json", "--mechanism", "output", "--epsilon", "1", "--out", "m.json"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = dputil(&["attack", "m.json", "cfg.json"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("privacy_leakage"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    dputil(&["synth", "--n", "200", "--d", "3", "--out", "data.csv"], p);
    std::fs::write(p.join("cfg.json"), CONFIG.replace("[0.1, 10]", "[1]")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dputil"))
        .args(["sweep", "cfg.json"])
        .current_dir(p)
        .env("DPUTIL_OUT_DIR", p.join("envout"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(p.join("envout/results.csv").exists());
}

#[test]
fn missing_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dputil(&["sweep", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.json") && err.contains("No such file"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dputil(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(dputil(&["sweep", "x.json", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(dputil(&[], dir.path()).status.code(), Some(2));
}

#[test]
fn report_on_empty_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dputil(&["report", "."], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
