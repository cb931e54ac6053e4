//! Exit codes and artefacts of the `bscatter` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scratch() -> TempDir {
    tempfile::tempdir().unwrap()
}

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_bscatter")).arg("run").arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

#[test]
fn regularity_passes_with_positive_sigma() {
    let t = scratch();
    let d = t.path();
    let o = run(d, r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "experiments": ["regularity"]}"#, &["--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(d);
    let p = &m["records"][0]["probes"][0];
    assert_eq!(p["probe"], "sigma_min");
    assert!(p["measured"].as_f64().unwrap() > 0.0);
    assert_eq!(p["tolerance_pass"], true);
    assert!(d.join("out/report.md").exists());
    assert!(d.join("out/timings.json").exists());
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let t = scratch();
    let d = t.path();
    let o = run(d, r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "experiments": ["fourier"]}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown experiment: fourier"));
    assert!(!d.join("out").exists());
}

#[test]
fn tightened_slope_fails_and_names_the_probe() {
    let t = scratch();
    let d = t.path();
    let o = run(
        d,
        r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.5}}, "grid": {"radius": 6.0, "resolution": 2},
            "experiments": ["mexpand"], "tolerances": {"mexpand_slope": [1.99, 2.01]}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("m2_slope: measured"), "{err}");
    assert!(err.contains("expected in [1.99, 2.01]"), "{err}");
    let m = manifest(d);
    assert_eq!(m["pass"], false);
    let p = &m["records"][0]["probes"][0];
    assert!(p["fitted"]["slope"].as_f64().is_some());
    let csv = std::fs::read_to_string(d.join("out/mexpand.csv")).unwrap();
    assert!(csv.starts_with("lambda,m2_norm,dm2_norm,condition\n") && !csv.contains('\r'));
}

#[test]
fn empty_experiment_list_writes_header_only_report() {
    let t = scratch();
    let d = t.path();
    let o = run(d, r#"{"potential": {"name": "bump", "params": {"c": 1.0}}, "experiments": []}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let report = std::fs::read_to_string(d.join("out/report.md")).unwrap();
    assert!(report.starts_with("# bscatter report\n"));
    assert!(!report.contains("##"));
    assert_eq!(manifest(d)["records"].as_array().unwrap().len(), 0);
}

#[test]
fn bad_config_and_missing_file_exit_two() {
    let t = scratch();
    let d = t.path();
    let o = run(d, r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "experiments": [], "colour": 3}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bscatter")).args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bscatter")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_is_rebuilt_from_the_manifest() {
    let t = scratch();
    let d = t.path();
    let o = run(d, r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.5}}, "experiments": ["dispersive", "bounds"]}"#, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = d.join("out/report.md");
    let first = std::fs::read_to_string(&report).unwrap();
    std::fs::remove_file(&report).unwrap();
    std::fs::remove_file(d.join("out/dispersive_decay.svg")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bscatter")).arg("report").arg(d.join("out/manifest.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&report).unwrap(), first);
    assert!(d.join("out/dispersive_decay.svg").exists());
}

#[test]
fn threads_from_environment() {
    let t = scratch();
    let d = t.path();
    let cfg = d.join("config.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "cutoff": {"lambda0": 0.1}, "experiments": ["a00"]}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bscatter"))
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(d.join("out"))
        .env("BSCATTER_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("out/a00.csv")).unwrap();
    assert!(csv.starts_with("x_r,y_r,term,re,im,abs,quad_err\n"));
    assert_eq!(csv.lines().count(), 1 + 200);
}
