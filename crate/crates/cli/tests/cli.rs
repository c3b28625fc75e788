//! End-to-end checks of the `krf` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn krf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krf")).args(args).output().expect("krf runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn verdict<'a>(summary: &'a Value, name: &str) -> &'a Value {
    summary["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["name"] == name)
        .unwrap_or_else(|| panic!("no verdict {name}"))
}

/// Every file under `dir` except the run metadata, by relative path.
fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().unwrap() != "run.meta.json" {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn presets_are_listed() {
    let out = krf(&["presets", "--json"]);
    assert_eq!(code(&out), 0);
    let table: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = table.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 9);
    assert!(names.contains(&"fik-selfsimilar"));
    assert!(names.contains(&"flat-cone"));
}

#[test]
fn flat_cone_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = krf(&["run", "--preset", "flat-cone", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.join("summary.json"));
    assert_eq!(summary["scenario"], "flat-cone");
    assert_eq!(verdict(&summary, "stationary")["pass"], true);
    assert_eq!(verdict(&summary, "curvature_zero")["pass"], true);
    for name in ["config.resolved.json", "run.meta.json", "curvature.csv", "drift.csv"] {
        assert!(dir.join(name).exists(), "{name} missing");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS stationary")));
}

#[test]
fn layers_apply_preset_then_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("layered");
    let file = tmp.path().join("layer.json");
    let layer = serde_json::json!({
        "preset": "flat-cone",
        "grid": { "points": 256 },
        "flow": { "horizon": 0.5 },
        "output_dir": dir,
    });
    fs::write(&file, layer.to_string()).unwrap();
    let out = krf(&["run", "--config", file.to_str().unwrap(), "--horizon", "0.25"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = read_json(&dir.join("config.resolved.json"));
    assert_eq!(cfg["preset"], "flat-cone");
    assert_eq!(cfg["grid"]["points"], 256);
    assert_eq!(cfg["grid"]["rho_max"], 14.0);
    assert_eq!(cfg["flow"]["horizon"], 0.25);
    assert_eq!(cfg["flow"]["scheme"], "explicit_rk4");
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = krf(&["run", "--preset", "cylinder-split", "--output-dir", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (fa, mut fb) = (artifacts(&a), artifacts(&b));
    assert!(fa.len() > 3);
    // The resolved config records its own output directory.
    let key = PathBuf::from("config.resolved.json");
    fb.insert(key.clone(), fa[&key].clone());
    assert_eq!(fa, fb);
}

#[test]
fn cylinder_divisor_shrinks_linearly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cyl");
    let out = krf(&["run", "--preset", "cylinder-split", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let summary = read_json(&dir.join("summary.json"));
    let slope = verdict(&summary, "phi_slope");
    assert_eq!(slope["pass"], true);
    assert_eq!(slope["expected"], -1.0);
    assert!((slope["measured"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!(verdict(&summary, "psi_drift")["measured"].as_f64().unwrap() < 1e-8);
}

#[test]
fn soliton_preset_reports_exact_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sol");
    let out = krf(&["run", "--preset", "conical-soliton", "--order", "3", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let summary = read_json(&dir.join("summary.json"));
    let series = summary["tables"]["soliton_series"].as_array().unwrap();
    assert_eq!(series.len(), 3);
    assert_eq!(series[0]["coefficient"], "-1/2");
    assert!(dir.join("series.csv").exists());
}

#[test]
fn bad_config_exits_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bad");
    let out = krf(&["run", "--preset", "flat-cone", "--points", "3", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.points"));
    assert!(!dir.exists() || fs::read_dir(&dir).unwrap().next().is_none());

    let file = tmp.path().join("typo.json");
    fs::write(&file, r#"{"preset": "flat-cone", "flow": {"horizn": 1}}"#).unwrap();
    let out = krf(&["run", "--config", file.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("flow"));
}

#[test]
fn failed_verdict_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("strict");
    let out = krf(&[
        "run",
        "--preset",
        "flat-cone",
        "--points",
        "256",
        "--bc-kind",
        "prescribed",
        "--set",
        "analysis.tolerances.stationary=1e-300",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.join("summary.json"));
    assert_eq!(verdict(&summary, "stationary")["pass"], false);
}

#[test]
fn numerical_failure_exits_3_and_leaves_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("unstable");
    let out = krf(&[
        "run",
        "--preset",
        "cylinder-split",
        "--lambda",
        "5",
        "--dt",
        "0.5",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(artifacts(&dir).is_empty());
    assert!(!dir.join("run.meta.json").exists());
}

#[test]
fn sweep_runs_every_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, points) in [256, 512].iter().enumerate() {
        let file = tmp.path().join(format!("c{i}.json"));
        let layer = serde_json::json!({
            "preset": "flat-cone",
            "grid": { "points": points },
            "flow": { "horizon": 0.25 },
            "output_dir": tmp.path().join(format!("sweep{i}")),
        });
        fs::write(&file, layer.to_string()).unwrap();
        files.push(file);
    }
    let out = krf(&["run", "--config", files[0].to_str().unwrap(), "--config", files[1].to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..2 {
        assert!(tmp.path().join(format!("sweep{i}/summary.json")).exists());
    }

    let out = krf(&[
        "run",
        "--config",
        files[0].to_str().unwrap(),
        "--config",
        files[1].to_str().unwrap(),
        "--output-dir",
        tmp.path().join("same").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}
