use std::path::Path;
use std::process::{Command, Output};

use bargmann_lens_cli::output::{sha256_hex, Manifest, Summary};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bargmann-lens"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("BARGMANN_LENS_THREADS").output().expect("spawn")
}

fn is_empty_dir(p: &Path) -> bool {
    !p.exists() || std::fs::read_dir(p).unwrap().next().is_none()
}

#[test]
fn decreasing_ladder_is_rejected_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["sweep", "--preset", "torus-n1", "--k-ladder", "16,4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(is_empty_dir(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[grid]\npoints_per_axis = 33\nspacing = 0.1\n").unwrap();
    let out = tmp.path().join("run");
    let o = run(&["renorm", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(is_empty_dir(&out));
}

#[test]
fn unknown_preset_is_rejected() {
    let o = run(&["renorm", "--preset", "torus-n7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_over_no_inputs_is_an_empty_passing_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("summary");
    let o = run(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.runs.is_empty());
    assert!(summary.passed);
}

#[test]
fn model_check_passes_and_manifest_matches_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mc");
    let o = run(&["model-check", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.artifacts.len(), 3);
    for a in &manifest.artifacts {
        let bytes = std::fs::read(out.join(&a.path)).unwrap();
        assert_eq!(a.sha256, sha256_hex(&bytes), "{}", a.path);
        assert_eq!(a.bytes, bytes.len() as u64);
    }

    let sum = tmp.path().join("summary");
    let o = run(&["report", out.to_str().unwrap(), "--out", sum.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(sum.join("summary.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.contains("model-check") && table.contains("passed"));
}

#[test]
fn failing_threshold_exits_one_with_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("strict.toml");
    // no section on this grid has a margin anywhere near 1e6
    std::fs::write(
        &cfg,
        "[grid]\npoints_per_axis = 33\nradius = 0.9\n\n[ladder]\npowers = [16]\n\n\
         [thresholds]\ntransversality = 1e6\n",
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = run(&["renorm", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("report.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn seed_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mc");
    let o = run(&["model-check", "--seed", "99", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}
