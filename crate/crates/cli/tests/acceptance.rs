//! Acceptance criteria 1-8, one PASS/FAIL line each. Runs sequentially so
//! the wall-clock limits are measured without competing work.

use std::path::Path;
use std::time::{Duration, Instant};

use bargmann_lens::backends::theta_basis;
use bargmann_lens::diagnostics::{
    curvature_estimate, zero_count_by_winding, zero_locus, DiagnosticsReport, FlatStructure,
};
use bargmann_lens::model_bundle::{bargmann_section, BallDomain, GridSection, Polynomial};
use bargmann_lens::Complex64;
use bargmann_lens_cli::config::{ExperimentConfig, Overrides};
use bargmann_lens_cli::experiments::{holomorphy_equivalence, model_identities};
use bargmann_lens_cli::{execute, execute_and_write, Experiment, RunReport, Status};

type Verdict = Result<String, String>;

struct Criterion {
    id: u8,
    title: &'static str,
    limit: Duration,
    body: fn() -> Verdict,
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::preset(name).expect("known preset")
}

/// Every check whose name starts with one of `prefixes` passed, and at least
/// one such check exists.
fn require(report: &DiagnosticsReport, prefixes: &[&str]) -> Verdict {
    let selected: Vec<_> =
        report.checks.iter().filter(|c| prefixes.iter().any(|p| c.name.starts_with(p))).collect();
    if selected.is_empty() {
        return Err(format!("no checks matching {prefixes:?}"));
    }
    let summary = selected.iter().map(|c| format!("{}={}", c.name, fmt(c.value))).collect::<Vec<_>>().join(", ");
    if selected.iter().all(|c| c.passed) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("none".into(), |x| format!("{x:.3e}"))
}

fn completed(run: &RunReport) -> Result<(), String> {
    match &run.error {
        Some(e) => Err(format!("numeric failure: {e}")),
        None => Ok(()),
    }
}

fn c1() -> Verdict {
    let mut report = DiagnosticsReport::new("model-check");
    model_identities(&preset("model-check"), &mut report).map_err(|e| e.to_string())?;
    require(&report, &["model_curvature_analytic", "gauged_curvature_fd_order", "radial_flatness_defect"])
}

fn c2() -> Verdict {
    let mut report = DiagnosticsReport::new("model-check");
    holomorphy_equivalence(&preset("model-check"), &mut report).map_err(|e| e.to_string())?;
    require(&report, &["holomorphy_criteria_gap"])
}

fn c3() -> Verdict {
    let run = execute(Experiment::Sweep, &preset("torus-n1"), 0);
    completed(&run)?;
    require(&run.report, &["limit_distances_decrease", "limit_dbar_defect"])
}

fn c4() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    // torus structure in both dimensions, at a single rung
    for (n, grid) in [(1usize, 129usize), (2, 17)] {
        let mut cfg = preset(if n == 1 { "torus-n1" } else { "torus-n2" });
        cfg.apply(&Overrides { grid: Some(grid), k_ladder: Some(vec![16]), ..Default::default() });
        cfg.thresholds.require_cauchy = false;
        cfg.thresholds.dbar_ratio = None;
        cfg.thresholds.seed_convergence = None;
        cfg.thresholds.symplectic_margin = None;
        cfg.thresholds.transversality = None;
        cfg.thresholds.structure_deviation = Some(1e-10);
        cfg.diagnostics.zero_set = false;
        let run = execute(Experiment::Renorm, &cfg, 0);
        completed(&run)?;
        let v = require(&run.report, &["structure_deviation"]);
        ok &= v.is_ok();
        parts.push(format!("torus n={n}: {}", v.unwrap_or_else(|e| e)));
    }
    let run = execute(Experiment::Sweep, &preset("cp1"), 0);
    completed(&run)?;
    let v = require(&run.report, &["structure_metric_c0_slope"]);
    ok &= v.is_ok();
    parts.push(format!("cp1: {}", v.unwrap_or_else(|e| e)));
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5() -> Verdict {
    let run = execute(Experiment::Zeroset, &preset("torus-n2"), 0);
    completed(&run)?;
    require(&run.report, &["zero_convergence_rate", "symplectic_margin", "transversality_margin"])
}

fn c6() -> Verdict {
    let run = execute(Experiment::Sweep, &preset("torus-n2-ladder"), 0);
    completed(&run)?;
    let u: Vec<String> =
        run.report.rungs.iter().map(|r| format!("u_{}={}", r.k, fmt(r.metric("curvature_sup")))).collect();
    require(&run.report, &["curvature_ratio"]).map(|s| format!("{s} ({})", u.join(", "))).map_err(|s| format!("{s} ({})", u.join(", ")))
}

fn c7() -> Verdict {
    let mut parts = Vec::new();

    // zero set of z_1 · Gaussian: the plane z_1 = 0
    let d = BallDomain::new(2, 0.9, 17).map_err(|e| e.to_string())?;
    let h = d.spacing();
    let s = bargmann_section(&Polynomial::coordinate(2, 0), d).map_err(|e| e.to_string())?;
    let locus = zero_locus(&s).map_err(|e| e.to_string())?;
    let reach = d.radius() - 2.0 * h;
    let mut plane = Vec::new();
    let m = 24;
    for i in 0..=m {
        for j in 0..=m {
            let (a, b) = (-reach + 2.0 * reach * i as f64 / m as f64, -reach + 2.0 * reach * j as f64 / m as f64);
            if a * a + b * b <= reach * reach {
                plane.push(vec![0.0, 0.0, a, b]);
            }
        }
    }
    // distance from a locus point to the plane is |z_1|
    let to_plane = locus.points.iter().map(|p| p.point[0].hypot(p.point[1])).fold(0.0, f64::max);
    let hausdorff = to_plane.max(locus.coverage_of(&plane));
    let plane_ok = hausdorff <= 2.0 * h;
    parts.push(format!("hausdorff={hausdorff:.3e} (2h={:.3e})", 2.0 * h));

    // a round 2-sphere in the slice y_2 = 0
    let r = 0.6;
    let d = BallDomain::unit(2, 17).map_err(|e| e.to_string())?;
    let sphere = GridSection::sample(d, |z| Complex64::new(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - r * r, z[3]))
        .map_err(|e| e.to_string())?;
    let locus = zero_locus(&sphere).map_err(|e| e.to_string())?;
    let k = curvature_estimate(&locus, &sphere, &FlatStructure { n: 2 })
        .map_err(|e| e.to_string())?
        .sup
        .unwrap_or(f64::NAN);
    let rel = (k * r * r - 1.0).abs();
    let sphere_ok = rel <= 0.05;
    parts.push(format!("sphere |K R^2 - 1|={rel:.3e}"));

    // a level-k theta function has k zeros in a fundamental domain
    let mut counts_ok = true;
    for level in [4u32, 8, 16] {
        let count = zero_count_by_winding(|x, y| theta_basis(level, 1, x, y), [0.013, 1.013], [0.007, 1.007], 4096)
            .map_err(|e| e.to_string())?;
        counts_ok &= count == level as i64;
        parts.push(format!("zeros(k={level})={count}"));
    }
    let msg = parts.join(", ");
    if plane_ok && sphere_ok && counts_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn files_equal(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{} differs", name.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn c8() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (label, mut cfg) in [("torus-n1", preset("torus-n1")), ("torus-n2-ladder", preset("torus-n2-ladder"))] {
        cfg.apply(&Overrides { grid: Some(if label == "torus-n1" { 33 } else { 11 }), ..Default::default() });
        if label == "torus-n2-ladder" {
            cfg.apply(&Overrides { k_ladder: Some(vec![4, 16, 64]), ..Default::default() });
            cfg.diagnostics.connection_points_per_axis = 9;
        }
        let mut dirs = Vec::new();
        for threads in [1usize, 4] {
            let dir = tmp.path().join(format!("{label}-{threads}"));
            cfg.output.dir = dir.clone();
            let (run, _) = execute_and_write(Experiment::Sweep, &cfg, threads).map_err(|e| e.to_string())?;
            if run.status == Status::Error {
                return Err(format!("{label}: {:?}", run.error));
            }
            dirs.push(dir);
        }
        checked += files_equal(&dirs[0], &dirs[1]).map_err(|e| format!("{label}: {e}"))?;
    }
    Ok(format!("{checked} files byte-identical across 1 and 4 threads"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "model identities", limit: Duration::from_secs(5), body: c1 },
        Criterion { id: 2, title: "holomorphy equivalence", limit: Duration::from_secs(10), body: c2 },
        Criterion { id: 3, title: "torus ladder limit", limit: Duration::from_secs(120), body: c3 },
        Criterion { id: 4, title: "rescaled structure convergence", limit: Duration::from_secs(300), body: c4 },
        Criterion { id: 5, title: "transverse zero set is symplectic", limit: Duration::from_secs(600), body: c5 },
        Criterion { id: 6, title: "bounded zero-set curvature", limit: Duration::from_secs(900), body: c6 },
        Criterion { id: 7, title: "oracle equivalence", limit: Duration::from_secs(900), body: c7 },
        Criterion { id: 8, title: "determinism across thread counts", limit: Duration::from_secs(900), body: c8 },
    ];
    let mut failures = 0;
    for c in criteria {
        let start = Instant::now();
        let verdict = (c.body)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (ok, detail) = match verdict {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        let timing = format!("{:.1}s / limit {}s", elapsed.as_secs_f64(), c.limit.as_secs());
        println!(
            "{} criterion {}: {} [{}{}] {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            timing,
            if in_time { "" } else { ", over time" },
            detail
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
