//! Report, tables and manifest. Nothing here records wall-clock time or
//! thread counts, so the files are a function of the configuration alone.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bargmann_lens::diagnostics::{Check, DiagnosticsReport, Metric, Resolution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const REPORT_FILE: &str = "report.json";
pub const RUNGS_FILE: &str = "rungs.csv";
pub const CHECKS_FILE: &str = "checks.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_REPORT_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Passed,
    Failed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub report: DiagnosticsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub config_sha256: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.to_toml().as_bytes())
}

/// Shortest round-trip representation, with an exponent for small and large
/// magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn resolution_fields(r: &Resolution) -> [String; 4] {
    [r.n.to_string(), r.points_per_axis.to_string(), num(r.radius), num(r.spacing)]
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// One row per rung metric, long format.
pub fn rungs_csv(report: &DiagnosticsReport) -> io::Result<Vec<u8>> {
    let rows = report
        .rungs
        .iter()
        .flat_map(|rung| {
            let center = rung.center.iter().map(|&c| num(c)).collect::<Vec<_>>().join(" ");
            rung.metrics.iter().map(move |m| metric_row(vec![rung.k.to_string(), center.clone()], m))
        })
        .chain(report.metrics.iter().map(|m| metric_row(vec![String::new(), String::new()], m)))
        .collect();
    csv_bytes(
        &["k", "center", "metric", "value", "tolerance", "n", "points_per_axis", "radius", "spacing", "note"],
        rows,
    )
}

fn metric_row(mut prefix: Vec<String>, m: &Metric) -> Vec<String> {
    prefix.push(m.name.clone());
    prefix.push(opt(m.value));
    prefix.push(opt(m.tolerance));
    prefix.extend(resolution_fields(&m.resolution));
    prefix.push(m.note.clone().unwrap_or_default());
    prefix
}

pub fn checks_csv(checks: &[Check]) -> io::Result<Vec<u8>> {
    let rows = checks
        .iter()
        .map(|c| {
            let mut row = vec![
                c.name.clone(),
                opt(c.value),
                serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                num(c.threshold),
                opt(c.upper),
                c.passed.to_string(),
            ];
            match &c.resolution {
                Some(r) => row.extend(resolution_fields(r)),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            row
        })
        .collect();
    csv_bytes(
        &["check", "value", "comparison", "threshold", "upper", "passed", "n", "points_per_axis", "radius", "spacing"],
        rows,
    )
}

fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> io::Result<Vec<Artifact>> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        artifacts.push(Artifact { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }
    Ok(artifacts)
}

fn json_bytes<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes report, tables and manifest into `dir`; returns the manifest.
pub fn write_run(dir: &Path, run: &RunReport) -> io::Result<Manifest> {
    let files = [
        (REPORT_FILE, json_bytes(run)?),
        (RUNGS_FILE, rungs_csv(&run.report)?),
        (CHECKS_FILE, checks_csv(&run.report.checks)?),
    ];
    let artifacts = write_all(dir, &files)?;
    let manifest = Manifest {
        experiment: run.experiment.clone(),
        seed: run.seed,
        config_sha256: run.config_sha256.clone(),
        artifacts,
    };
    fs::write(dir.join(MANIFEST_FILE), json_bytes(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub source: String,
    pub experiment: String,
    pub status: Status,
    pub seed: u64,
    pub config_sha256: String,
    pub checks_passed: usize,
    pub checks_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<SummaryRow>,
    pub passed: bool,
}

/// Merges the reports found in `sources` (each a run directory or a report
/// file) into one summary table.
pub fn summarize(sources: &[PathBuf]) -> io::Result<Summary> {
    let mut runs = Vec::new();
    for src in sources {
        let path = if src.is_dir() { src.join(REPORT_FILE) } else { src.clone() };
        let text = fs::read_to_string(&path)?;
        let run: RunReport = serde_json::from_str(&text)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
        runs.push(SummaryRow {
            source: src.display().to_string(),
            experiment: run.experiment,
            status: run.status,
            seed: run.seed,
            config_sha256: run.config_sha256,
            checks_passed: run.report.checks.iter().filter(|c| c.passed).count(),
            checks_total: run.report.checks.len(),
        });
    }
    let passed = runs.iter().all(|r| r.status == Status::Passed);
    Ok(Summary { runs, passed })
}

pub fn write_summary(dir: &Path, summary: &Summary) -> io::Result<()> {
    let rows = summary
        .runs
        .iter()
        .map(|r| {
            vec![
                r.source.clone(),
                r.experiment.clone(),
                serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                r.seed.to_string(),
                r.config_sha256.clone(),
                r.checks_passed.to_string(),
                r.checks_total.to_string(),
            ]
        })
        .collect();
    let table = csv_bytes(&["source", "experiment", "status", "seed", "config_sha256", "checks_passed", "checks_total"], rows)?;
    write_all(dir, &[(SUMMARY_FILE, table), (SUMMARY_REPORT_FILE, json_bytes(summary)?)])?;
    Ok(())
}
