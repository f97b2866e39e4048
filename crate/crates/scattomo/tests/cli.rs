use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scattomo::schema::{validate, SchemaKind};
use serde_json::Value;
use tempfile::TempDir;

const BUNDLED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/elastic_m2.json");

fn scattomo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scattomo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SCATTOMO_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn bundled_config_reconstructs_within_bounds() {
    let dir = TempDir::new().unwrap();
    let out = scattomo(dir.path(), &["reconstruct", "--config", BUNDLED]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&dir.path().join("reconstruct.json"));
    let sectors = report["estimates"].as_array().unwrap();
    assert!(!sectors.is_empty());
    for s in sectors {
        assert_eq!(s["within_bound"], Value::Bool(true), "{s}");
    }
    validate(SchemaKind::Report, &report).unwrap();
    validate(SchemaKind::Records, &json(&dir.path().join("records.json"))).unwrap();
}

#[test]
fn too_few_ports_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, r#"{"reconstruct":{"ports":1,"sectors":[{"out":[0,1],"in":[0,1]}]}}"#);
    let out = scattomo(&dir.path().join("out"), &["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not enough ports"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, r#"{"reconstruct":{"powr":0.1}}"#);
    let out = scattomo(&dir.path().join("out"), &["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("powr"), "{}", stderr(&out));
}

#[test]
fn small_cutoff_is_a_numeric_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, r#"{"reconstruct":{"oracle":{"cutoff":2},"power":3.0}}"#);
    let out = scattomo(&dir.path().join("out"), &["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("hilbert"), "{}", stderr(&out));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, r#"{"reconstruct":{"noise":{"shots":1000,"detector_noise_std":0.5}}}"#);
    let runs: Vec<PathBuf> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for run in &runs {
        let out = scattomo(run, &["reconstruct", "--seed", "42", "--config", config.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["records.json", "reconstruct.json"] {
        assert_eq!(fs::read(runs[0].join(name)).unwrap(), fs::read(runs[1].join(name)).unwrap(), "{name}");
    }
    let other = dir.path().join("c");
    scattomo(&other, &["reconstruct", "--seed", "43", "--config", config.to_str().unwrap()]);
    assert_ne!(fs::read(runs[0].join("records.json")).unwrap(), fs::read(other.join("records.json")).unwrap());
}

#[test]
fn thread_count_does_not_change_surfaces() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, r#"{"figure3":{"b":{"half_width":1.0,"step":0.25}}}"#);
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(threads);
        let out = Command::new(env!("CARGO_BIN_EXE_scattomo"))
            .args(["figure3", "--panel", "b", "--config", config.to_str().unwrap(), "--out"])
            .arg(&out_dir)
            .env("SCATTOMO_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        validate(SchemaKind::Surface, &json(&out_dir.join("figure3b.json"))).unwrap();
        validate(SchemaKind::Report, &json(&out_dir.join("figure3b_report.json"))).unwrap();
        files.push(fs::read(out_dir.join("figure3b.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn records_can_be_reconstructed_again() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let out = scattomo(&first, &["reconstruct"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let records = first.join("records.json");
    let config = write_config(
        &dir,
        &format!(r#"{{"reconstruct":{{"records_in":{}}}}}"#, Value::String(records.display().to_string())),
    );
    let second = dir.path().join("second");
    let out = scattomo(&second, &["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let estimates = |p: &Path| {
        let report = json(&p.join("reconstruct.json"));
        report["estimates"].as_array().unwrap().iter().map(|s| (s["re"].clone(), s["im"].clone())).collect::<Vec<_>>()
    };
    assert_eq!(estimates(&first), estimates(&second));
}

#[test]
fn panel_a_writes_bound_table() {
    let dir = TempDir::new().unwrap();
    let out = scattomo(dir.path(), &["figure3", "--panel", "a"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("figure3a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24 * 12);
    validate(SchemaKind::Report, &json(&dir.path().join("figure3a_report.json"))).unwrap();
}
