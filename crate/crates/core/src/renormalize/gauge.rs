use std::sync::Arc;

use num_complex::Complex64;

use super::chart::Chart;
use crate::backends::{parallel_transport_steps, Path};
use crate::error::{Error, Result};
use crate::model_bundle::BallDomain;
use crate::par;

/// Largest phase increment per transport step.
const MAX_PHASE_STEP: f64 = 0.02;
const PHASE_DIFFERENCE_STEP: f64 = 1e-5;

/// The ray `t ↦ φ(t w)`, `t ∈ [0, 1]`. Points the chart cannot reach come
/// back non-finite, which the backend's coverage check rejects.
struct RadialPath<'a> {
    chart: &'a Chart,
    w: &'a [f64],
}

impl RadialPath<'_> {
    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        self.chart.ray(self.w, t).unwrap_or_else(|_| {
            let d = self.w.len();
            (vec![f64::NAN; d], vec![f64::NAN; d])
        })
    }
}

impl Path for RadialPath<'_> {
    fn position(&self, t: f64) -> Vec<f64> {
        self.eval(t).0
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        self.eval(t).1
    }
}

/// Radial transport with a step count fixed once per gauge, so the phase is a
/// smooth function of the endpoint.
#[derive(Debug)]
pub(crate) struct GaugeCore {
    pub(crate) chart: Chart,
    pub(crate) steps: usize,
}

impl GaugeCore {
    /// `ψ(w)` and the modulus drift before renormalization.
    pub(crate) fn transport(&self, w: &[f64]) -> Result<(Complex64, f64)> {
        if w.iter().all(|x| *x == 0.0) {
            return Ok((Complex64::new(1.0, 0.0), 0.0));
        }
        let path = RadialPath { chart: &self.chart, w };
        let r = parallel_transport_steps(self.chart.backend().as_ref(), self.chart.power(), &path, self.steps)?;
        Ok((r.value, r.modulus_drift))
    }

    pub(crate) fn phase(&self, w: &[f64]) -> Result<Complex64> {
        Ok(self.transport(w)?.0)
    }

    /// `-i dψ/ψ` (a real covector) by centered differences of the phase.
    pub(crate) fn phase_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut x = w.to_vec();
        let mut out = Vec::with_capacity(w.len());
        for b in 0..w.len() {
            x[b] = w[b] + PHASE_DIFFERENCE_STEP;
            let p = self.phase(&x)?;
            x[b] = w[b] - PHASE_DIFFERENCE_STEP;
            let m = self.phase(&x)?;
            x[b] = w[b];
            out.push((p / m).arg() / (2.0 * PHASE_DIFFERENCE_STEP));
        }
        Ok(out)
    }

    fn rate(&self, w: &[f64], t: f64) -> Result<f64> {
        let (q, v) = self.chart.ray(w, t)?;
        let c = self.chart.backend().connection_coefficients(self.chart.power(), &q);
        Ok(c.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs())
    }
}

/// Unit-modulus transport of the `L^k` fiber along radial rays of a chart,
/// sampled at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct RadialGauge {
    pub(crate) core: Arc<GaugeCore>,
    domain: BallDomain,
    values: Arc<Vec<Complex64>>,
    max_drift: f64,
}

/// Parallel transport of the fiber coordinate along `t ↦ φ(t w)` for every
/// node `w` of the grid.
pub fn radial_gauge(chart: &Chart, grid: BallDomain) -> Result<RadialGauge> {
    if grid.radius() > 1.0 + 1e-12 {
        return Err(Error::InvalidDomain(format!("gauge grid radius {} exceeds 1", grid.radius())));
    }
    if grid.real_dim() != chart.real_dim() {
        return Err(Error::DimensionMismatch { expected: chart.real_dim(), got: grid.real_dim() });
    }
    let nodes = grid.nodes();
    let probe = GaugeCore { chart: chart.clone(), steps: 1 };
    let rates = par::try_map_slice(&nodes, |&f| {
        let w = grid.node_point(f);
        let mut worst = 0.0_f64;
        for t in [0.0, 0.5, 1.0] {
            worst = worst.max(probe.rate(&w, t)?);
        }
        Ok::<f64, Error>(worst)
    })?;
    let a_max = par::max_of(rates);
    let steps = ((grid.radius() / grid.spacing()).ceil() as usize).max((a_max / MAX_PHASE_STEP).ceil() as usize).max(1);
    let core = Arc::new(GaugeCore { chart: chart.clone(), steps });
    let transported = par::try_map_slice(&nodes, |&f| core.transport(&grid.node_point(f)))?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.cube_len()];
    let mut max_drift = 0.0_f64;
    for (&f, (v, drift)) in nodes.iter().zip(transported) {
        values[f] = v;
        max_drift = max_drift.max(drift);
    }
    Ok(RadialGauge { core, domain: grid, values: Arc::new(values), max_drift })
}

impl RadialGauge {
    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn chart(&self) -> &Chart {
        &self.core.chart
    }

    /// RK4 steps per ray.
    pub fn steps(&self) -> usize {
        self.core.steps
    }

    pub fn value_at(&self, flat: usize) -> Complex64 {
        self.values[flat]
    }

    /// Gauge values indexed like the grid cube (zero off the ball).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Transport to an arbitrary point, with the gauge's step count.
    pub fn phase_at(&self, w: &[f64]) -> Result<Complex64> {
        self.core.phase(w)
    }

    /// Largest `| |ψ| - 1 |` before the final renormalization.
    pub fn max_modulus_drift(&self) -> f64 {
        self.max_drift
    }

    /// `max | |ψ| - 1 |` over nodes after renormalization.
    pub fn unitarity_defect(&self) -> f64 {
        par::max_of(self.domain.nodes().into_iter().map(|f| (self.values[f].norm() - 1.0).abs()))
    }
}
