use num_complex::Complex64;

use super::PrequantizedKahler;
use crate::error::{Error, Result};

/// A curve in patch coordinates parametrized by `t ∈ [0, 1]`.
pub trait Path: Sync {
    fn position(&self, t: f64) -> Vec<f64>;

    fn velocity(&self, t: f64) -> Vec<f64>;

    /// Parameter values where the velocity may jump; integration steps never
    /// straddle them. Always starts at 0 and ends at 1.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPath {
    pub point: Vec<f64>,
}

impl Path for ConstantPath {
    fn position(&self, _t: f64) -> Vec<f64> {
        self.point.clone()
    }

    fn velocity(&self, _t: f64) -> Vec<f64> {
        vec![0.0; self.point.len()]
    }
}

/// Piecewise-linear path through the vertices, each segment taking an equal
/// share of the parameter interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    vertices: Vec<Vec<f64>>,
}

impl PolylinePath {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("a polyline needs at least two vertices".into()));
        }
        let d = vertices[0].len();
        if let Some(v) = vertices.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        Ok(Self { vertices })
    }

    /// Closed axis-parallel square loop of side `eps` with lower-left corner
    /// `p`, traversed counter-clockwise in the `(x_α, y_α)` plane.
    pub fn square_loop(p: &[f64], alpha: usize, eps: f64) -> Result<Self> {
        let mut corners = Vec::with_capacity(5);
        for (dx, dy) in [(0.0, 0.0), (eps, 0.0), (eps, eps), (0.0, eps), (0.0, 0.0)] {
            let mut q = p.to_vec();
            q[2 * alpha] += dx;
            q[2 * alpha + 1] += dy;
            corners.push(q);
        }
        Self::new(corners)
    }

    pub fn reversed(&self) -> Self {
        Self { vertices: self.vertices.iter().rev().cloned().collect() }
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let m = self.vertices.len() - 1;
        let s = (t.clamp(0.0, 1.0) * m as f64).min(m as f64 - 1e-15);
        let i = (s.floor() as usize).min(m - 1);
        (i, s - i as f64)
    }
}

impl Path for PolylinePath {
    fn position(&self, t: f64) -> Vec<f64> {
        let (i, u) = self.segment(t);
        let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
        a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        let (i, _) = self.segment(t);
        let m = (self.vertices.len() - 1) as f64;
        let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
        a.iter().zip(b).map(|(x, y)| m * (y - x)).collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let m = self.vertices.len() - 1;
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResult {
    /// Transported fiber coordinate, renormalized to unit modulus.
    pub value: Complex64,
    /// `| |raw| - 1 |` before renormalization.
    pub modulus_drift: f64,
    pub steps: usize,
}

/// Solves `ψ' = -A_k(γ') ψ`, `ψ(0) = 1`, along the path with fixed-step RK4,
/// at most `max_step` in patch-coordinate length per step.
pub fn parallel_transport(
    backend: &dyn PrequantizedKahler,
    k: u32,
    path: &dyn Path,
    max_step: f64,
) -> Result<TransportResult> {
    if !(max_step > 0.0) {
        return Err(Error::InvalidArgument("transport step must be positive".into()));
    }
    transport(backend, k, path, |len| ((len / max_step).ceil() as usize).max(1))
}

/// As [`parallel_transport`] with a fixed number of RK4 steps per path
/// segment, so the result depends smoothly on the path.
pub fn parallel_transport_steps(
    backend: &dyn PrequantizedKahler,
    k: u32,
    path: &dyn Path,
    steps: usize,
) -> Result<TransportResult> {
    transport(backend, k, path, |_| steps.max(1))
}

fn transport(
    backend: &dyn PrequantizedKahler,
    k: u32,
    path: &dyn Path,
    step_count: impl Fn(f64) -> usize,
) -> Result<TransportResult> {
    let rate = |t: f64| -> Result<Complex64> {
        let p = path.position(t);
        backend.check_point(&p)?;
        let v = path.velocity(t);
        let c = backend.connection_coefficients(k, &p);
        let a: f64 = c.iter().zip(&v).map(|(x, y)| x * y).sum();
        // -A(v) = -i a
        Ok(Complex64::new(0.0, -a))
    };
    let mut psi = Complex64::new(1.0, 0.0);
    let mut steps = 0;
    let breaks = path.breakpoints();
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = step_count(segment_length(path, t0, t1));
        let dt = (t1 - t0) / n as f64;
        // stay strictly inside the segment so the velocity is the segment's
        let inner = |t: f64| t.clamp(t0 + 1e-14 * (t1 - t0), t1 - 1e-14 * (t1 - t0));
        for i in 0..n {
            let t = t0 + i as f64 * dt;
            let k1 = rate(inner(t))?;
            let k2 = rate(inner(t + 0.5 * dt))?;
            let k4 = rate(inner(t + dt))?;
            let a1 = k1 * psi;
            let a2 = k2 * (psi + 0.5 * dt * a1);
            let a3 = k2 * (psi + 0.5 * dt * a2);
            let a4 = k4 * (psi + dt * a3);
            psi += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        }
        steps += n;
    }
    if !psi.re.is_finite() || !psi.im.is_finite() {
        return Err(Error::IntegrationFailure("transport diverged".into()));
    }
    let modulus = psi.norm();
    Ok(TransportResult { value: psi / modulus, modulus_drift: (modulus - 1.0).abs(), steps })
}

fn segment_length(path: &dyn Path, t0: f64, t1: f64) -> f64 {
    let m = 16;
    let mut prev = path.position(t0);
    let mut len = 0.0;
    for i in 1..=m {
        let q = path.position(t0 + (t1 - t0) * i as f64 / m as f64);
        len += prev.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prev = q;
    }
    len
}
