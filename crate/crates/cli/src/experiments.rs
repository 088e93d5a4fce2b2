//! The pipelines behind each subcommand. Each one fills a report as it goes,
//! so a numeric failure halfway still leaves the finished rungs behind.

use std::f64::consts::PI;
use std::sync::Arc;

use bargmann_lens::backends::{
    coherent_zero_family, cp1_backend, cp1_section, torus_backend, Cp1, FlatTorus, PrequantizedKahler,
    SectionFamily, ThetaSection,
};
use bargmann_lens::diagnostics::{
    curvature_estimate, symplectic_margin, transversality_margin, zero_locus, Check, Comparison,
    DiagnosticsReport, Epsilon, FlatStructure, Metric, Resolution, RungRecord,
};
use bargmann_lens::model_bundle::{
    bargmann_section, curvature_of, dbar_defect, holomorphy_criteria_gap, radial_flatness_defect, BallDomain,
    ConnectionField, DerivativeMode, FnConnection, GridSection, Polynomial,
};
use bargmann_lens::renormalize::{
    build_chart, identity_frame, limit_extract, pullback_connection, pullback_structure, radial_gauge,
    renormalize_section,
};
use bargmann_lens::{Complex64, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BackendKind, ExperimentConfig, FamilyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ModelCheck,
    Renorm,
    Sweep,
    Zeroset,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ModelCheck => "model-check",
            Experiment::Renorm => "renorm",
            Experiment::Sweep => "sweep",
            Experiment::Zeroset => "zeroset",
        }
    }
}

/// A report plus the numeric failure that cut it short, if any.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: DiagnosticsReport,
    pub failure: Option<String>,
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Outcome {
    let mut report = DiagnosticsReport::new(experiment.name());
    let result = match experiment {
        Experiment::ModelCheck => model_check(cfg, &mut report),
        Experiment::Renorm => single_rung(cfg, &mut report, false),
        Experiment::Zeroset => single_rung(cfg, &mut report, true),
        Experiment::Sweep => sweep(cfg, &mut report),
    };
    Outcome { report, failure: result.err().map(|e| e.to_string()) }
}

fn metric(name: &str, value: f64, grid: &BallDomain) -> Metric {
    Metric::new(name, Some(value), Resolution::from(grid))
}

// ---------------------------------------------------------------------------
// model-check

/// Gauge function whose differential is added to the model connection; the
/// curvature is unchanged but no longer exact under finite differences.
fn chi_gradient(z: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; z.len()];
    for a in 0..z.len() / 2 {
        let (x, y) = (z[2 * a], z[2 * a + 1]);
        g[2 * a] += 2.0 * (2.0 * x).cos() * (3.0 * y).cos();
        g[2 * a + 1] -= 3.0 * (2.0 * x).sin() * (3.0 * y).sin();
    }
    // couple the first and last coordinates so mixed planes are exercised
    let last = z.len() - 1;
    let c = 0.5 * (z[0] + z[last]).cos();
    g[0] += c;
    g[last] += c;
    g
}

fn gauged_model(dim: usize, domain: BallDomain) -> bargmann_lens::Result<ConnectionField> {
    let form = FnConnection::new(dim, |z: &[f64]| {
        let chi = chi_gradient(z);
        (0..z.len())
            .map(|a| chi[a] + if a % 2 == 0 { PI * z[a + 1] } else { -PI * z[a - 1] })
            .collect()
    });
    ConnectionField::new(domain, Arc::new(form))
}

fn sample_points(rng: &mut ChaCha8Rng, dim: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..radius)).collect();
            if p.iter().map(|x| x * x).sum::<f64>() < radius * radius {
                break p;
            }
        })
        .collect()
}

fn random_polynomial(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> Polynomial {
    let mut p = Polynomial::new(n);
    let mut exps = vec![0u32; n];
    loop {
        if exps.iter().sum::<u32>() as usize <= degree {
            p.add_term(exps.clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        // odometer over exponents 0..=degree
        let mut i = 0;
        loop {
            if i == n {
                return p;
            }
            exps[i] += 1;
            if exps[i] as usize <= degree {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// Sub-ball for the holomorphy comparison, leaving stencil room on the
/// coarsest grid.
const GAP_RADIUS: f64 = 0.6;

fn model_check(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> bargmann_lens::Result<()> {
    model_identities(cfg, report)?;
    holomorphy_equivalence(cfg, report)
}

/// Curvature (analytic, and finite-difference order on a gauge-transformed
/// copy), radial flatness, and the finite-difference order of the
/// Cauchy-Riemann defect, for `n = 1, 2`.
pub fn model_identities(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> bargmann_lens::Result<()> {
    let t = &cfg.thresholds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for n in [1usize, 2] {
        let d = 2 * n;
        let coarse = BallDomain::new(n, 1.0, 21)?;
        let fine = BallDomain::new(n, 1.0, 41)?;
        let points = sample_points(&mut rng, d, 8, 0.5);

        let model = ConnectionField::model(coarse);
        let mut analytic = 0.0_f64;
        for z in &points {
            analytic = analytic.max(curvature_of(&model, z, DerivativeMode::Analytic)?.deviation_from_standard(1.0));
        }
        let mut m = metric(&format!("model_curvature_analytic[n={n}]"), analytic, &coarse);
        if let Some(tol) = t.model_curvature {
            m = m.with_tolerance(tol);
            report.checks.push(Check::new(&m.name, m.value, Comparison::Le, tol).at(m.resolution));
        }
        report.metrics.push(m);

        let error_at = |grid: BallDomain| -> bargmann_lens::Result<f64> {
            let a = gauged_model(d, grid)?;
            let mut e = 0.0_f64;
            for z in &points {
                e = e.max(curvature_of(&a, z, DerivativeMode::FiniteDifference)?.deviation_from_standard(1.0));
            }
            Ok(e)
        };
        let (e_h, e_h2) = (error_at(coarse)?, error_at(fine)?);
        report.metrics.push(metric(&format!("gauged_curvature_fd_error[n={n}]"), e_h, &coarse));
        report.metrics.push(metric(&format!("gauged_curvature_fd_error[n={n}]"), e_h2, &fine));
        let order = (e_h / e_h2).log2();
        let m = metric(&format!("gauged_curvature_fd_order[n={n}]"), order, &fine)
            .with_note("observed order under halving of the grid spacing");
        if let Some([lo, hi]) = t.fd_order {
            report.checks.push(Check::within(&m.name, m.value, lo, hi).at(m.resolution));
        }
        report.metrics.push(m);

        let flat = radial_flatness_defect(&model);
        let mut m = metric(&format!("radial_flatness_defect[n={n}]"), flat, &coarse);
        if let Some(tol) = t.radial_flatness {
            m = m.with_tolerance(tol);
            report.checks.push(Check::new(&m.name, m.value, Comparison::Le, tol).at(m.resolution));
        }
        report.metrics.push(m);

        // finite-difference order of the Cauchy-Riemann defect of a fixed
        // holomorphic section
        let poly = random_polynomial(&mut rng, n, 2);
        let fd = |grid: BallDomain| dbar_defect(&bargmann_section(&poly, grid)?, DerivativeMode::FiniteDifference, 0.5);
        let (c, f) = (fd(coarse)?, fd(fine)?);
        report
            .metrics
            .push(metric(&format!("bargmann_dbar_fd_order[n={n}]"), (c / f).log2(), &fine).with_note("informational"));
    }

    Ok(())
}

/// Covariant versus reweighted ordinary Cauchy-Riemann defects on random
/// polynomial sections, alternating `n = 1, 2`.
pub fn holomorphy_equivalence(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> bargmann_lens::Result<()> {
    let t = &cfg.thresholds;
    // a separate stream, so the polynomials do not depend on the identity checks
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut worst = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    let mut res = None;
    for i in 0..cfg.model_check.polynomials {
        let n = 1 + i % 2;
        let degree = rng.gen_range(0..=cfg.model_check.max_degree);
        let poly = random_polynomial(&mut rng, n, degree);
        let grid = BallDomain::new(n, 0.9, if n == 1 { 41 } else { 17 })?;
        let s = bargmann_section(&poly, grid)?;
        worst = worst.max(holomorphy_criteria_gap(&s, DerivativeMode::Analytic, GAP_RADIUS)?);
        worst_fd = worst_fd.max(holomorphy_criteria_gap(&s, DerivativeMode::FiniteDifference, GAP_RADIUS)?);
        if n == 2 {
            res = Some(grid);
        }
    }
    let grid = res.unwrap_or(BallDomain::new(1, 0.9, 41)?);
    let mut m = metric("holomorphy_criteria_gap", worst, &grid)
        .with_note(format!("{} random polynomial sections, degree ≤ {}", cfg.model_check.polynomials, cfg.model_check.max_degree));
    if let Some(tol) = t.holomorphy_gap {
        m = m.with_tolerance(tol);
        report.checks.push(Check::new(&m.name, m.value, Comparison::Le, tol).at(m.resolution));
    }
    report.metrics.push(m);
    report.metrics.push(metric("holomorphy_criteria_gap_fd", worst_fd, &grid).with_note("discretization level, informational"));
    Ok(())
}

// ---------------------------------------------------------------------------
// backends and families

enum Backend {
    Torus(FlatTorus),
    Cp1(Cp1),
}

struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    backend: Backend,
    arc: Arc<dyn PrequantizedKahler>,
    grid: BallDomain,
    connection_grid: BallDomain,
    cp1_coeffs: Vec<Complex64>,
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a ExperimentConfig) -> bargmann_lens::Result<Self> {
        let (backend, arc): (Backend, Arc<dyn PrequantizedKahler>) = match cfg.backend.kind {
            BackendKind::Torus => {
                let t = torus_backend(cfg.backend.n)?;
                (Backend::Torus(t), Arc::new(t))
            }
            BackendKind::Cp1 => (Backend::Cp1(cp1_backend()), Arc::new(cp1_backend())),
        };
        let n = cfg.complex_dim();
        let grid = BallDomain::new(n, cfg.grid.radius, cfg.grid.points_per_axis)?;
        let connection_grid = BallDomain::new(n, cfg.grid.radius, cfg.diagnostics.connection_points_per_axis)?;
        let cp1_coeffs = match &cfg.family {
            FamilyConfig::Cp1Poly { random_degree: Some(d), .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                (0..=*d).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
            }
            FamilyConfig::Cp1Poly { coeffs, .. } => coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
            _ => Vec::new(),
        };
        Ok(Self { cfg, backend, arc, grid, connection_grid, cp1_coeffs })
    }

    fn family(&self, k: u32, center: &[f64]) -> bargmann_lens::Result<Arc<dyn SectionFamily>> {
        let pair = |c: &[f64; 2]| Complex64::new(c[0], c[1]);
        Ok(match (&self.cfg.family, &self.backend) {
            (FamilyConfig::Theta { js }, Backend::Torus(_)) => Arc::new(ThetaSection::product(k, js)?),
            (FamilyConfig::OddTheta { j }, Backend::Torus(_)) => Arc::new(ThetaSection::odd_pair(k, *j)?),
            (FamilyConfig::Coherent { offsets, weights }, Backend::Torus(t)) => {
                let offsets: Vec<Vec<Complex64>> = offsets.iter().map(|o| o.iter().map(pair).collect()).collect();
                let weights: Vec<Complex64> = weights.iter().map(pair).collect();
                Arc::new(coherent_zero_family(t, k, center, &offsets, &weights)?)
            }
            (FamilyConfig::Cp1Poly { .. }, Backend::Cp1(c)) => Arc::new(cp1_section(k, &self.cp1_coeffs, c)?),
            _ => return Err(Error::InvalidArgument("family does not match backend".into())),
        })
    }
}

// ---------------------------------------------------------------------------
// rungs

struct Rung {
    record: RungRecord,
    section: GridSection,
}

fn run_rung(setup: &Setup, k: u32, center: &[f64], zero_set: bool) -> bargmann_lens::Result<Rung> {
    let cfg = setup.cfg;
    let grid = setup.grid;
    let res = Resolution::from(&grid);
    let r = cfg.diagnostics.subball_radius;
    let n = cfg.complex_dim();
    let mut metrics = Vec::new();
    let mut push = |name: &str, v: f64| metrics.push(Metric::new(name, Some(v), res));

    let chart = build_chart(Arc::clone(&setup.arc), center, k, &identity_frame(n))?;
    let inv = chart.invariants(16, grid.radius())?;
    push("chart_metric_at_origin", inv.metric_at_origin);
    push("chart_complex_linearity", inv.complex_linearity);
    push("chart_radial_speed_drift", inv.radial_speed_drift);

    let gauge = radial_gauge(&chart, grid)?;
    push("gauge_steps", gauge.steps() as f64);
    push("gauge_unitarity_defect", gauge.unitarity_defect());
    push("gauge_modulus_drift", gauge.max_modulus_drift());

    let section = renormalize_section(setup.family(k, center)?, &chart, &gauge, grid)?;
    push("sigma_max", section.max_abs());
    let analytic = match dbar_defect(&section, DerivativeMode::Analytic, r) {
        Ok(v) => Some(v),
        Err(Error::NoAnalyticDerivative(_)) => None,
        Err(e) => return Err(e),
    };
    metrics.push(Metric::new("dbar_defect", analytic, res).with_note(format!("sub-ball radius {r}")));
    let fd = dbar_defect(&section, DerivativeMode::FiniteDifference, r)?;
    metrics.push(Metric::new("dbar_defect_fd", Some(fd), res).with_note(format!("sub-ball radius {r}")));

    let tm = transversality_margin(&section, Epsilon::RelativeToMax(cfg.diagnostics.epsilon), DerivativeMode::FiniteDifference)?;
    let mut m = Metric::new("transversality_margin", tm.margin, res);
    if tm.is_vacuous() {
        m = m.with_note("no node below the transversality level");
    }
    metrics.push(m.with_tolerance(tm.threshold));
    metrics.push(Metric::new("transversality_level", Some(tm.threshold), res));
    metrics.push(Metric::new("transversality_near_zero_nodes", Some(tm.near_zero_nodes as f64), res));

    let (_, sd) = pullback_structure(&chart, grid, r)?;
    let note = format!("sub-ball radius {r}");
    for (name, v) in [
        ("structure_metric_c0", sd.metric_c0),
        ("structure_metric_c1", sd.metric_c1),
        ("structure_symplectic_c0", sd.symplectic_c0),
        ("structure_symplectic_c1", sd.symplectic_c1),
        ("structure_complex_c0", sd.complex_c0),
        ("structure_complex_c1", sd.complex_c1),
        ("structure_at_origin", sd.at_origin),
    ] {
        metrics.push(Metric::new(name, Some(v), res).with_note(note.clone()));
    }

    let cgrid = setup.connection_grid;
    let cgauge = radial_gauge(&chart, cgrid)?;
    let (_, cd) = pullback_connection(&chart, &cgauge, cgrid)?;
    metrics.push(Metric::new("connection_model_deviation", Some(cd.model_deviation), Resolution::from(&cgrid)));
    metrics.push(Metric::new("connection_radial_contraction", Some(cd.radial_contraction), Resolution::from(&cgrid)));

    if zero_set {
        let locus = zero_locus(&section)?;
        let mut push = |name: &str, v: Option<f64>| metrics.push(Metric::new(name, v, res));
        push("zero_seeds", Some(locus.seeds as f64));
        push("zero_converged", Some(locus.converged as f64));
        push("zero_convergence_rate", Some(locus.convergence_rate()));
        push("zero_points", Some(locus.points.len() as f64));
        push("zero_trimmed", Some(locus.trimmed as f64));
        push("zero_dropped", Some(locus.dropped as f64));
        push("zero_degenerate", Some(locus.degenerate_count() as f64));
        let sm = symplectic_margin(&locus, &FlatStructure { n });
        push("symplectic_margin", sm.margin);
        if n >= 2 {
            let u = curvature_estimate(&locus, &section, &FlatStructure { n })?;
            push("curvature_sup", u.sup);
            push("curvature_metric_deviation", Some(u.metric_deviation));
        }
    }

    Ok(Rung { record: RungRecord { k, center: center.to_vec(), metrics }, section })
}

/// Checks that apply to one rung on its own.
fn rung_checks(cfg: &ExperimentConfig, rung: &RungRecord, res: Resolution) -> Vec<Check> {
    let t = &cfg.thresholds;
    let k = rung.k;
    let mut out = Vec::new();
    if let Some(tol) = t.structure_deviation {
        let worst = [
            "structure_metric_c0",
            "structure_metric_c1",
            "structure_symplectic_c0",
            "structure_symplectic_c1",
            "structure_complex_c0",
            "structure_complex_c1",
        ]
        .iter()
        .map(|n| rung.metric(n))
        .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)));
        out.push(Check::new(format!("structure_deviation[k={k}]"), worst, Comparison::Le, tol).at(res));
    }
    if let Some(tol) = t.seed_convergence {
        out.push(Check::new(format!("zero_convergence_rate[k={k}]"), rung.metric("zero_convergence_rate"), Comparison::Ge, tol).at(res));
    }
    if let Some(tol) = t.symplectic_margin {
        out.push(Check::new(format!("symplectic_margin[k={k}]"), rung.metric("symplectic_margin"), Comparison::Gt, tol).at(res));
    }
    if let Some(tol) = t.transversality {
        out.push(Check::new(format!("transversality_margin[k={k}]"), rung.metric("transversality_margin"), Comparison::Gt, tol).at(res));
    }
    out
}

fn single_rung(cfg: &ExperimentConfig, report: &mut DiagnosticsReport, zero_set: bool) -> bargmann_lens::Result<()> {
    let setup = Setup::new(cfg)?;
    let rung = run_rung(&setup, cfg.ladder.powers[0], cfg.ladder.center_of(0), zero_set || cfg.diagnostics.zero_set)?;
    report.checks.extend(rung_checks(cfg, &rung.record, Resolution::from(&setup.grid)));
    report.rungs.push(rung.record);
    Ok(())
}

/// Least-squares slope of `ln y` against `ln k` over positive values.
pub fn log_log_slope(points: &[(u32, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(_, y)| *y > 0.0 && y.is_finite()).map(|&(k, y)| ((k as f64).ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> bargmann_lens::Result<()> {
    let setup = Setup::new(cfg)?;
    let res = Resolution::from(&setup.grid);
    let t = &cfg.thresholds;
    let mut sections = Vec::new();
    for (i, &k) in cfg.ladder.powers.iter().enumerate() {
        let rung = run_rung(&setup, k, cfg.ladder.center_of(i), cfg.diagnostics.zero_set)?;
        report.checks.extend(rung_checks(cfg, &rung.record, res));
        report.rungs.push(rung.record);
        sections.push(rung.section);
    }
    let powers = &cfg.ladder.powers;

    if sections.len() >= 3 {
        let r = cfg.diagnostics.subball_radius;
        let limit = limit_extract(&sections, powers, cfg.diagnostics.order, r)?;
        let s = &limit.summary;
        for (pair, d) in powers.windows(2).zip(&s.distances) {
            report.metrics.push(
                Metric::new(format!("limit_distance[{}->{}]", pair[0], pair[1]), Some(*d), res)
                    .with_note(format!("C^{} on sub-ball radius {r}", s.order)),
            );
        }
        report.metrics.push(Metric::new("limit_cauchy", Some(if s.cauchy { 1.0 } else { 0.0 }), res));
        if t.require_cauchy {
            report.checks.push(Check::flag("limit_distances_decrease", s.cauchy).at(res));
        }
        if let Some(ratio) = t.dbar_ratio {
            let first = report.rungs[0].metric("dbar_defect");
            let last = report.rungs.last().and_then(|r| r.metric("dbar_defect"));
            let bound = first.map_or(t.dbar_floor, |f| (ratio * f).max(t.dbar_floor));
            report.checks.push(Check::new("limit_dbar_defect", last, Comparison::Le, bound).at(res));
        }
    }

    let c0: Vec<(u32, f64)> =
        report.rungs.iter().filter_map(|r| r.metric("structure_metric_c0").map(|v| (r.k, v))).collect();
    let slope = log_log_slope(&c0);
    report.metrics.push(
        Metric::new("structure_metric_c0_slope", slope, res).with_note("log-log fit against k; absent when deviations vanish"),
    );
    if let Some([lo, hi]) = t.structure_slope {
        report.checks.push(Check::within("structure_metric_c0_slope", slope, lo, hi).at(res));
    }

    if cfg.diagnostics.zero_set && cfg.complex_dim() >= 2 {
        let ratio = |min_k: u32| {
            let u: Vec<f64> =
                report.rungs.iter().filter(|r| r.k >= min_k).filter_map(|r| r.metric("curvature_sup")).collect();
            let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = u.iter().cloned().fold(0.0, f64::max);
            (u.len() >= 2 && lo > 0.0).then(|| hi / lo)
        };
        report.metrics.push(Metric::new("curvature_ratio_all", ratio(0), res));
        if let Some(tol) = t.curvature_ratio {
            let m_k = t.curvature_ratio_min_k;
            let v = ratio(m_k);
            report.metrics.push(
                Metric::new("curvature_ratio", v, res).with_tolerance(tol).with_note(format!("rungs with k ≥ {m_k}")),
            );
            report.checks.push(Check::new("curvature_ratio", v, Comparison::Le, tol).at(res));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(u32, f64)> = [8u32, 32, 128].iter().map(|&k| (k, 3.0 / k as f64)).collect();
        assert!((log_log_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&[(4, 0.0), (16, 0.0)]), None);
    }

    #[test]
    fn random_polynomials_respect_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 0..=5 {
            let p = random_polynomial(&mut rng, 2, d);
            assert_eq!(p.degree(), d);
            assert_eq!(p.terms().count(), (d + 1) * (d + 2) / 2);
        }
    }
}
