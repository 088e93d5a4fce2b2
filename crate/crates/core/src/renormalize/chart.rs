use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backends::PrequantizedKahler;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_entry, unitarity_defect};

const FRAME_TOLERANCE: f64 = 1e-10;

/// Rescaled geodesic chart `w ↦ exp_p(U w / √k)` of the metric `g_k = k g`.
#[derive(Clone)]
pub struct Chart {
    backend: Arc<dyn PrequantizedKahler>,
    center: Vec<f64>,
    k: u32,
    frame: Vec<Complex64>,
    /// Real matrix of `w ↦ U w / √k` into `T_p X`.
    lift: DMatrix<f64>,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("backend", &self.backend.name())
            .field("center", &self.center)
            .field("k", &self.k)
            .finish()
    }
}

pub fn identity_frame(n: usize) -> Vec<Complex64> {
    (0..n * n)
        .map(|i| if i / n == i % n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// Real `2n x 2n` matrix of a complex `n x n` matrix on interleaved coordinates.
fn realify_matrix(u: &[Complex64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let c = u[a * n + b];
            m[(2 * a, 2 * b)] = c.re;
            m[(2 * a, 2 * b + 1)] = -c.im;
            m[(2 * a + 1, 2 * b)] = c.im;
            m[(2 * a + 1, 2 * b + 1)] = c.re;
        }
    }
    m
}

/// `frame` is a unitary `n x n` matrix, row-major, identifying `C^n` with the
/// backend's unitary basis at `p`.
pub fn build_chart(
    backend: Arc<dyn PrequantizedKahler>,
    p: &[f64],
    k: u32,
    frame: &[Complex64],
) -> Result<Chart> {
    let n = backend.complex_dim();
    if k == 0 {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    backend.check_point(p)?;
    if frame.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: frame.len() });
    }
    let deviation = unitarity_defect(frame, n);
    if !(deviation <= FRAME_TOLERANCE) {
        return Err(Error::NonUnitaryFrame { deviation });
    }
    let lift = backend.unitary_basis(p) * realify_matrix(frame, n) / (k as f64).sqrt();
    Ok(Chart { backend, center: p.to_vec(), k, frame: frame.to_vec(), lift })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartInvariants {
    /// `max |φ^* g_k (0) - I|`.
    pub metric_at_origin: f64,
    /// `max |dφ(0) J - J dφ(0)|`, after normalizing `dφ(0)` to unit scale.
    pub complex_linearity: f64,
    /// Largest relative change of the `g_k`-speed along sampled rays.
    pub radial_speed_drift: f64,
}

impl Chart {
    pub fn backend(&self) -> &Arc<dyn PrequantizedKahler> {
        &self.backend
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn power(&self) -> u32 {
        self.k
    }

    pub fn frame(&self) -> &[Complex64] {
        &self.frame
    }

    pub fn complex_dim(&self) -> usize {
        self.backend.complex_dim()
    }

    pub fn real_dim(&self) -> usize {
        self.backend.real_dim()
    }

    /// Initial velocity `U w / √k` of the ray through `w`.
    pub fn initial_velocity(&self, w: &[f64]) -> Vec<f64> {
        (&self.lift * nalgebra::DVector::from_column_slice(w)).as_slice().to_vec()
    }

    /// `(φ(t w), d/dt φ(t w))`.
    pub fn ray(&self, w: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if w.len() != self.real_dim() {
            return Err(Error::DimensionMismatch { expected: self.real_dim(), got: w.len() });
        }
        let v = self.initial_velocity(w);
        self.backend.geodesic(&self.center, &v, t)
    }

    pub fn evaluate(&self, w: &[f64]) -> Result<Vec<f64>> {
        let q = self.ray(w, 1.0)?.0;
        self.backend.check_point(&q)?;
        Ok(q)
    }

    /// `dφ(w)`, closed form when the backend provides the exponential map's
    /// Jacobian, otherwise centered differences.
    pub fn differential(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.initial_velocity(w);
        if let Some(j) = self.backend.exp_jacobian(&self.center, &v) {
            return Ok(j * &self.lift);
        }
        let d = self.real_dim();
        let step = 1e-6;
        let mut out = DMatrix::zeros(d, d);
        let mut x = w.to_vec();
        for b in 0..d {
            x[b] = w[b] + step;
            let fp = self.evaluate(&x)?;
            x[b] = w[b] - step;
            let fm = self.evaluate(&x)?;
            x[b] = w[b];
            for a in 0..d {
                out[(a, b)] = (fp[a] - fm[a]) / (2.0 * step);
            }
        }
        Ok(out)
    }

    /// `φ^* g_k` at `w`.
    pub fn pulled_metric(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.evaluate(w)?;
        let d = self.differential(w)?;
        Ok(d.transpose() * self.backend.metric(&q) * &d * self.k as f64)
    }

    /// `φ^* ω_k` at `w`.
    pub fn pulled_symplectic(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.evaluate(w)?;
        let d = self.differential(w)?;
        Ok(d.transpose() * self.backend.symplectic(&q) * &d * self.k as f64)
    }

    /// `dφ^{-1} J dφ` at `w`.
    pub fn pulled_complex_structure(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.evaluate(w)?;
        let d = self.differential(w)?;
        let inv = d
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::IntegrationFailure(format!("chart differential singular at {w:?}")))?;
        Ok(inv * self.backend.complex_structure(&q) * d)
    }

    /// Checks the defining properties of the chart: `φ^* g_k = I` and
    /// complex-linear differential at the origin, constant `g_k`-speed along
    /// `rays` deterministic rays of length `reach`.
    pub fn invariants(&self, rays: usize, reach: f64) -> Result<ChartInvariants> {
        let d = self.real_dim();
        let zero = vec![0.0; d];
        let metric_at_origin = max_abs_entry(&(self.pulled_metric(&zero)? - DMatrix::identity(d, d)));
        let d0 = self.differential(&zero)? * (self.k as f64).sqrt();
        let j_here = self.backend.complex_structure(&self.center);
        let j_std = crate::linalg::standard_complex_structure(self.complex_dim());
        let scale = max_abs_entry(&d0).max(f64::MIN_POSITIVE);
        let complex_linearity = max_abs_entry(&(&j_here * &d0 - &d0 * j_std)) / scale;
        let mut drift = 0.0_f64;
        for r in 0..rays {
            let dir = ray_direction(r, d);
            let w: Vec<f64> = dir.iter().map(|x| x * reach).collect();
            let speed = |t: f64| -> Result<f64> {
                let (q, v) = self.ray(&w, t)?;
                let g = self.backend.metric(&q) * self.k as f64;
                let vv = nalgebra::DVector::from_column_slice(&v);
                Ok((vv.transpose() * g * &vv)[0].sqrt())
            };
            let s0 = speed(0.0)?;
            for i in 1..=8 {
                let s = speed(i as f64 / 8.0)?;
                drift = drift.max((s / s0 - 1.0).abs());
            }
        }
        Ok(ChartInvariants { metric_at_origin, complex_linearity, radial_speed_drift: drift })
    }
}

/// Deterministic, well-spread unit vectors (golden-ratio sequence).
fn ray_direction(i: usize, d: usize) -> Vec<f64> {
    let golden = 0.618_033_988_749_894_9;
    let mut v: Vec<f64> = (0..d)
        .map(|a| {
            let u = ((i + 1) as f64 * golden * (a + 1) as f64 + 0.1 * a as f64).fract();
            (2.0 * std::f64::consts::PI * u).sin() + 0.3 * (a as f64 - 0.5 * d as f64 + i as f64 * 0.17).cos()
        })
        .collect();
    let n = crate::linalg::norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{cp1_backend, torus_backend};

    #[test]
    fn torus_chart_is_affine() {
        let chart = build_chart(Arc::new(torus_backend(1).unwrap()), &[0.3, 0.4], 4, &identity_frame(1)).unwrap();
        let q = chart.evaluate(&[1.0, 0.0]).unwrap();
        assert!((q[0] - 0.8).abs() < 1e-15 && (q[1] - 0.4).abs() < 1e-15);
        assert_eq!(chart.evaluate(&[0.0, 0.0]).unwrap(), vec![0.3, 0.4]);
        let inv = chart.invariants(16, 0.9).unwrap();
        assert!(inv.metric_at_origin < 1e-12 && inv.complex_linearity < 1e-12);
        assert!(inv.radial_speed_drift < 1e-12);
    }

    #[test]
    fn cp1_chart_invariants() {
        let chart = build_chart(Arc::new(cp1_backend()), &[0.3, 0.2], 16, &identity_frame(1)).unwrap();
        let inv = chart.invariants(16, 0.9).unwrap();
        assert!(inv.metric_at_origin < 1e-10, "{inv:?}");
        assert!(inv.complex_linearity < 1e-10);
        assert!(inv.radial_speed_drift < 1e-10);
    }

    #[test]
    fn rejects_bad_frames() {
        let b: Arc<dyn PrequantizedKahler> = Arc::new(torus_backend(1).unwrap());
        let bad = [Complex64::new(1.1, 0.0)];
        assert!(matches!(build_chart(Arc::clone(&b), &[0.0, 0.0], 4, &bad), Err(Error::NonUnitaryFrame { .. })));
        assert!(build_chart(b, &[0.0, 0.0], 0, &identity_frame(1)).is_err());
    }
}
