use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chart::Chart;
use super::gauge::{GaugeCore, RadialGauge};
use crate::backends::SectionFamily;
use crate::diagnostics::StructureField;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_entry, standard_complex_structure, standard_symplectic};
use crate::model_bundle::{
    BallDomain, ConnectionField, ConnectionForm, GridSection, Representation, SectionEvaluator,
};
use crate::par;

fn same_chart(a: &Chart, b: &Chart) -> bool {
    a.power() == b.power() && a.center() == b.center() && a.frame() == b.frame() && a.backend().name() == b.backend().name()
}

/// `σ(w) = f(φ(w)) / ψ(w)`.
struct Renormalized {
    family: Arc<dyn SectionFamily>,
    core: Arc<GaugeCore>,
}

impl Renormalized {
    fn try_value(&self, w: &[f64]) -> Result<Complex64> {
        let q = self.core.chart.evaluate(w)?;
        Ok(self.family.value(&q) / self.core.phase(w)?)
    }

    fn try_gradient(&self, w: &[f64]) -> Result<Option<Vec<Complex64>>> {
        let q = self.core.chart.evaluate(w)?;
        let Some(gf) = self.family.gradient(&q) else {
            return Ok(None);
        };
        let d = self.core.chart.differential(w)?;
        let psi = self.core.phase(w)?;
        let sigma = self.family.value(&q) / psi;
        let theta = self.core.phase_gradient(w)?;
        let out = (0..w.len())
            .map(|b| {
                let df: Complex64 = (0..w.len()).map(|a| gf[a] * d[(a, b)]).sum();
                df / psi - sigma * Complex64::new(0.0, theta[b])
            })
            .collect();
        Ok(Some(out))
    }
}

impl SectionEvaluator for Renormalized {
    fn real_dim(&self) -> usize {
        self.core.chart.real_dim()
    }

    fn value(&self, w: &[f64]) -> Complex64 {
        self.try_value(w).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn gradient(&self, w: &[f64]) -> Option<Vec<Complex64>> {
        self.try_gradient(w).ok().flatten()
    }
}

/// The renormalized section `σ_k` on the grid, with a closed-form evaluator
/// (family value over gauge transport) for off-grid use.
pub fn renormalize_section(
    family: Arc<dyn SectionFamily>,
    chart: &Chart,
    gauge: &RadialGauge,
    grid: BallDomain,
) -> Result<GridSection> {
    if family.power() != chart.power() {
        return Err(Error::PowerMismatch { family: family.power(), chart: chart.power() });
    }
    if family.complex_dim() != chart.complex_dim() {
        return Err(Error::DimensionMismatch { expected: chart.complex_dim(), got: family.complex_dim() });
    }
    if *gauge.domain() != grid {
        return Err(Error::GridMismatch);
    }
    if !same_chart(chart, gauge.chart()) {
        return Err(Error::InvalidArgument("gauge was built on a different chart".into()));
    }
    let nodes = grid.nodes();
    let samples = par::try_map_slice(&nodes, |&f| {
        let q = chart.evaluate(&grid.node_point(f))?;
        let v = family.value(&q) / gauge.value_at(f);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(format!("renormalized section at {:?}", grid.node_point(f))));
        }
        Ok(v)
    })?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.cube_len()];
    for (&f, v) in nodes.iter().zip(samples) {
        values[f] = v;
    }
    let eval = Arc::new(Renormalized { family, core: Arc::clone(&gauge.core) });
    Ok(GridSection::from_parts(grid, values, Representation::ClosedForm(eval)))
}

/// `φ^* A_k + dψ/ψ`: the backend connection in the radial gauge.
pub struct GaugedPullback {
    core: Arc<GaugeCore>,
}

impl GaugedPullback {
    fn try_coefficients(&self, w: &[f64]) -> Result<Vec<f64>> {
        let chart = &self.core.chart;
        let q = chart.evaluate(w)?;
        let c = chart.backend().connection_coefficients(chart.power(), &q);
        let d = chart.differential(w)?;
        let theta = self.core.phase_gradient(w)?;
        Ok((0..w.len())
            .map(|b| (0..w.len()).map(|a| c[a] * d[(a, b)]).sum::<f64>() + theta[b])
            .collect())
    }
}

impl ConnectionForm for GaugedPullback {
    fn real_dim(&self) -> usize {
        self.core.chart.real_dim()
    }

    fn coefficients(&self, w: &[f64]) -> Vec<f64> {
        self.try_coefficients(w).unwrap_or_else(|_| vec![f64::NAN; w.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionDeviation {
    /// `sup |c_a(w) - c_a^model(w)|` over grid nodes.
    pub model_deviation: f64,
    /// `sup |A(w)(w)|`: zero for a radially flat gauge.
    pub radial_contraction: f64,
    pub nodes: usize,
}

pub fn pullback_connection(
    chart: &Chart,
    gauge: &RadialGauge,
    grid: BallDomain,
) -> Result<(ConnectionField, ConnectionDeviation)> {
    if *gauge.domain() != grid {
        return Err(Error::GridMismatch);
    }
    if !same_chart(chart, gauge.chart()) {
        return Err(Error::InvalidArgument("gauge was built on a different chart".into()));
    }
    let form = Arc::new(GaugedPullback { core: Arc::clone(&gauge.core) });
    let nodes = grid.nodes();
    let per_node = par::try_map_slice(&nodes, |&f| {
        let w = grid.node_point(f);
        let c = form.try_coefficients(&w)?;
        let model = [std::f64::consts::PI];
        let mut dev = 0.0_f64;
        for (a, ca) in c.iter().enumerate() {
            // model: c_x = π y, c_y = -π x
            let m = if a % 2 == 0 { model[0] * w[a + 1] } else { -model[0] * w[a - 1] };
            dev = dev.max((ca - m).abs());
        }
        let radial: f64 = c.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>().abs();
        Ok::<(f64, f64), Error>((dev, radial))
    })?;
    let deviation = ConnectionDeviation {
        model_deviation: par::max_of(per_node.iter().map(|x| x.0)),
        radial_contraction: par::max_of(per_node.iter().map(|x| x.1)),
        nodes: nodes.len(),
    };
    Ok((ConnectionField::new(grid, form)?, deviation))
}

/// `(φ^* g_k, φ^* ω_k, φ^* J)` evaluated on demand.
#[derive(Debug, Clone)]
pub struct PulledStructure {
    chart: Chart,
}

impl PulledStructure {
    pub fn new(chart: Chart) -> Self {
        Self { chart }
    }

    pub fn fields(&self, w: &[f64]) -> Result<[DMatrix<f64>; 3]> {
        Ok([
            self.chart.pulled_metric(w)?,
            self.chart.pulled_symplectic(w)?,
            self.chart.pulled_complex_structure(w)?,
        ])
    }
}

fn nan_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_element(d, d, f64::NAN)
}

impl StructureField for PulledStructure {
    fn real_dim(&self) -> usize {
        self.chart.real_dim()
    }

    fn metric(&self, z: &[f64]) -> DMatrix<f64> {
        self.chart.pulled_metric(z).unwrap_or_else(|_| nan_matrix(z.len()))
    }

    fn symplectic(&self, z: &[f64]) -> DMatrix<f64> {
        self.chart.pulled_symplectic(z).unwrap_or_else(|_| nan_matrix(z.len()))
    }

    fn complex_structure(&self, z: &[f64]) -> DMatrix<f64> {
        self.chart.pulled_complex_structure(z).unwrap_or_else(|_| nan_matrix(z.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureDeviation {
    pub metric_c0: f64,
    pub metric_c1: f64,
    pub symplectic_c0: f64,
    pub symplectic_c1: f64,
    pub complex_c0: f64,
    pub complex_c1: f64,
    /// Largest of the three `C^0` deviations at `w = 0`.
    pub at_origin: f64,
    pub subball_radius: f64,
    pub nodes: usize,
}

/// Pulled-back structure and its deviation from the flat standard structure
/// over grid nodes in the sub-ball of radius `r`. `C^1` parts are centered
/// differences with the grid spacing.
pub fn pullback_structure(chart: &Chart, grid: BallDomain, r: f64) -> Result<(PulledStructure, StructureDeviation)> {
    if grid.real_dim() != chart.real_dim() {
        return Err(Error::DimensionMismatch { expected: chart.real_dim(), got: grid.real_dim() });
    }
    let h = grid.spacing();
    if !(r > 0.0) || r + h > grid.radius() * (1.0 + 1e-12) {
        return Err(Error::InvalidDomain(format!("sub-ball radius {r} too large for grid radius {}", grid.radius())));
    }
    let n = chart.complex_dim();
    let d = 2 * n;
    let standard = [DMatrix::identity(d, d), standard_symplectic(n), standard_complex_structure(n)];
    let pulled = PulledStructure::new(chart.clone());
    let nodes = grid.nodes_within(r);
    let per_node = par::try_map_slice(&nodes, |&f| {
        let w = grid.node_point(f);
        let here = pulled.fields(&w)?;
        let mut c0 = [0.0; 3];
        let mut c1 = [0.0_f64; 3];
        for i in 0..3 {
            c0[i] = max_abs_entry(&(&here[i] - &standard[i]));
        }
        let mut x = w.clone();
        for b in 0..d {
            x[b] = w[b] + h;
            let fp = pulled.fields(&x)?;
            x[b] = w[b] - h;
            let fm = pulled.fields(&x)?;
            x[b] = w[b];
            for i in 0..3 {
                c1[i] = c1[i].max(max_abs_entry(&(&fp[i] - &fm[i])) / (2.0 * h));
            }
        }
        Ok::<([f64; 3], [f64; 3]), Error>((c0, c1))
    })?;
    let pick = |which: usize, first: bool| {
        par::max_of(per_node.iter().map(|(c0, c1)| if first { c0[which] } else { c1[which] }))
    };
    let origin = pulled.fields(&vec![0.0; d])?;
    let at_origin = (0..3).map(|i| max_abs_entry(&(&origin[i] - &standard[i]))).fold(0.0, f64::max);
    let dev = StructureDeviation {
        metric_c0: pick(0, true),
        metric_c1: pick(0, false),
        symplectic_c0: pick(1, true),
        symplectic_c1: pick(1, false),
        complex_c0: pick(2, true),
        complex_c1: pick(2, false),
        at_origin,
        subball_radius: r,
        nodes: nodes.len(),
    };
    Ok((pulled, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{cp1_backend, cp1_section, torus_backend, PrequantizedKahler, ThetaSection};
    use crate::model_bundle::{dbar_defect, DerivativeMode};
    use crate::renormalize::{build_chart, identity_frame, radial_gauge};

    fn torus_chart(p: &[f64], k: u32) -> Chart {
        let b: Arc<dyn PrequantizedKahler> = Arc::new(torus_backend(1).unwrap());
        build_chart(b, p, k, &identity_frame(1)).unwrap()
    }

    #[test]
    fn torus_connection_is_model_after_gauging() {
        let grid = BallDomain::new(1, 0.9, 21).unwrap();
        for p in [[0.0, 0.0], [0.31, -0.12]] {
            let chart = torus_chart(&p, 4);
            let gauge = radial_gauge(&chart, grid).unwrap();
            let (_, dev) = pullback_connection(&chart, &gauge, grid).unwrap();
            assert!(dev.model_deviation < 1e-6, "{dev:?}");
            assert!(dev.radial_contraction < 1e-6);
        }
    }

    #[test]
    fn torus_structure_is_flat() {
        let grid = BallDomain::new(1, 0.9, 21).unwrap();
        let (_, dev) = pullback_structure(&torus_chart(&[0.2, 0.7], 16), grid, 0.5).unwrap();
        for v in [dev.metric_c0, dev.metric_c1, dev.symplectic_c0, dev.symplectic_c1, dev.complex_c0, dev.complex_c1] {
            assert!(v < 1e-10);
        }
    }

    #[test]
    fn renormalized_theta_is_holomorphic_and_keeps_zeros() {
        let grid = BallDomain::new(1, 0.9, 33).unwrap();
        let chart = torus_chart(&[0.0, 0.0], 16);
        let gauge = radial_gauge(&chart, grid).unwrap();
        let fam = Arc::new(ThetaSection::odd_pair(16, 1).unwrap());
        let s = renormalize_section(fam, &chart, &gauge, grid).unwrap();
        let origin = grid.node_at(&[0.0, 0.0]).unwrap();
        assert!(s.value_at(origin).norm() < 1e-14);
        assert!(dbar_defect(&s, DerivativeMode::Analytic, 0.8).unwrap() < 1e-8);
        // node values agree with the evaluator
        let e = s.evaluator().unwrap();
        for f in grid.nodes().into_iter().step_by(37) {
            assert_eq!(e.value(&grid.node_point(f)), s.value_at(f));
        }
    }

    #[test]
    fn gauged_section_is_holomorphic_off_center() {
        // with p ≠ 0 the gauge is nontrivial; the renormalized section must
        // still be holomorphic for the (model) gauged connection
        let grid = BallDomain::new(1, 0.9, 33).unwrap();
        let chart = torus_chart(&[0.23, 0.41], 16);
        let gauge = radial_gauge(&chart, grid).unwrap();
        let fam = Arc::new(ThetaSection::product(16, &[5]).unwrap());
        let s = renormalize_section(fam, &chart, &gauge, grid).unwrap();
        assert!(dbar_defect(&s, DerivativeMode::Analytic, 0.8).unwrap() < 1e-6);
    }

    #[test]
    fn power_mismatch_and_zero_family() {
        let grid = BallDomain::new(1, 0.9, 17).unwrap();
        let chart = torus_chart(&[0.0, 0.0], 4);
        let gauge = radial_gauge(&chart, grid).unwrap();
        let fam = Arc::new(ThetaSection::product(8, &[1]).unwrap());
        assert!(matches!(
            renormalize_section(fam, &chart, &gauge, grid),
            Err(Error::PowerMismatch { family: 8, chart: 4 })
        ));
        let zero = Arc::new(ThetaSection::from_terms(4, 1, vec![]).unwrap());
        let s = renormalize_section(zero, &chart, &gauge, grid).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn cp1_pullback_approaches_flat() {
        let b: Arc<dyn PrequantizedKahler> = Arc::new(cp1_backend());
        let grid = BallDomain::new(1, 0.9, 17).unwrap();
        let mut last = f64::INFINITY;
        for k in [8, 32, 128] {
            let chart = build_chart(Arc::clone(&b), &[0.3, 0.2], k, &identity_frame(1)).unwrap();
            let (_, dev) = pullback_structure(&chart, grid, 0.5).unwrap();
            assert!(dev.at_origin < 1e-8);
            assert!(dev.metric_c0 < last);
            last = dev.metric_c0;
            let gauge = radial_gauge(&chart, grid).unwrap();
            let (_, cdev) = pullback_connection(&chart, &gauge, grid).unwrap();
            assert!(cdev.radial_contraction < 1e-4, "{cdev:?}");
            let sec = Arc::new(cp1_section(k, &[Complex64::new(0.2, 0.1), Complex64::new(1.0, 0.0)], &cp1_backend()).unwrap());
            let s = renormalize_section(sec, &chart, &gauge, grid).unwrap();
            assert!(s.max_abs().is_finite());
        }
    }
}
