use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{PrequantizedKahler, SectionFamily};
use crate::error::{Error, Result};
use crate::linalg::{standard_complex_structure, standard_symplectic};

/// Experiments stay inside `|ζ| ≤ CP1_CHART_LIMIT` of the affine chart.
pub const CP1_CHART_LIMIT: f64 = 5.0;

/// The projective line with the Fubini–Study form scaled to unit area, in
/// the affine chart `ζ = x + iy`:
///
/// ```text
/// ω = ρ dx∧dy,  g = ρ (dx² + dy²),  ρ = 1 / (π (1 + |ζ|²)²).
/// ```
///
/// This is the round sphere of radius `1/(2√π)`. The declared gauge of
/// `O(k)` is the unitary frame `e_hol / |e_hol|`, with connection
/// `-ik (x dy - y dx) / (1 + |ζ|²)`. On the overlap with the chart
/// `η = 1/ζ` the unitary frames differ by `(ζ/|ζ|)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cp1;

pub fn cp1_backend() -> Cp1 {
    Cp1
}

fn c(p: &[f64]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Cp1 {
    pub fn radius(&self) -> f64 {
        0.5 / PI.sqrt()
    }

    pub fn density(&self, p: &[f64]) -> f64 {
        let q = 1.0 + p[0] * p[0] + p[1] * p[1];
        1.0 / (PI * q * q)
    }

    /// Möbius rotation taking 0 to `p`.
    fn rotate(p: Complex64, z: Complex64) -> Complex64 {
        (z + p) / (Complex64::new(1.0, 0.0) - p.conj() * z)
    }

    fn rotate_derivative(p: Complex64, z: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - p.conj() * z;
        (1.0 + p.norm_sqr()) / (d * d)
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let (p, q) = (c(p), c(q));
        let w = (q - p) / (Complex64::new(1.0, 0.0) + p.conj() * q);
        2.0 * self.radius() * w.norm().atan()
    }

    /// Frame factor `f` with `s_0 = f · s_1` where `s_0`, `s_1` are the
    /// unitary-gauge values of one section of `O(k)` in the charts `ζ` and
    /// `η = 1/ζ`.
    pub fn transition(&self, k: u32, p: &[f64]) -> Complex64 {
        let z = c(p);
        (z / z.norm()).powi(k as i32)
    }

    /// `η = 1/ζ`.
    pub fn to_second_chart(&self, p: &[f64]) -> [f64; 2] {
        let e = c(p).inv();
        [e.re, e.im]
    }

    /// Geodesic by fixed-step RK4 on `ζ'' = 2 ζ̄ ζ'^2 / (1 + |ζ|^2)`. Used as an
    /// independent check of the closed form.
    pub fn ode_geodesic(&self, p: &[f64], v: &[f64], t: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
        let rhs = |z: Complex64, w: Complex64| 2.0 * z.conj() * w * w / (1.0 + z.norm_sqr());
        let mut z = c(p);
        let mut w = c(v);
        let dt = t / steps as f64;
        for _ in 0..steps {
            let (k1z, k1w) = (w, rhs(z, w));
            let (k2z, k2w) = (w + 0.5 * dt * k1w, rhs(z + 0.5 * dt * k1z, w + 0.5 * dt * k1w));
            let (k3z, k3w) = (w + 0.5 * dt * k2w, rhs(z + 0.5 * dt * k2z, w + 0.5 * dt * k2w));
            let (k4z, k4w) = (w + dt * k3w, rhs(z + dt * k3z, w + dt * k3w));
            z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        (vec![z.re, z.im], vec![w.re, w.im])
    }
}

impl PrequantizedKahler for Cp1 {
    fn name(&self) -> &'static str {
        "cp1"
    }

    fn complex_dim(&self) -> usize {
        1
    }

    fn metric(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * self.density(p)
    }

    fn symplectic(&self, p: &[f64]) -> DMatrix<f64> {
        standard_symplectic(1) * self.density(p)
    }

    fn complex_structure(&self, _p: &[f64]) -> DMatrix<f64> {
        standard_complex_structure(1)
    }

    // Rotate the sphere so p sits at the origin; there geodesics are rays
    // ζ(t) = û tan(|u| t).
    fn geodesic(&self, p: &[f64], v: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if p.len() != 2 || v.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.len().min(v.len()) });
        }
        let pc = c(p);
        let u = c(v) / (1.0 + pc.norm_sqr());
        let r = u.norm();
        let (g0, dg0) = if r == 0.0 {
            (Complex64::new(0.0, 0.0), u)
        } else {
            let a = r * t;
            if a >= 0.5 * PI - 1e-9 {
                return Err(Error::IntegrationFailure(format!(
                    "geodesic reaches the antipode of the chart (angle {a})"
                )));
            }
            let sec = 1.0 / a.cos();
            (u / r * a.tan(), u * sec * sec)
        };
        let q = Self::rotate(pc, g0);
        let dq = Self::rotate_derivative(pc, g0) * dg0;
        if !q.re.is_finite() || !q.im.is_finite() {
            return Err(Error::IntegrationFailure("non-finite geodesic point".into()));
        }
        Ok((vec![q.re, q.im], vec![dq.re, dq.im]))
    }

    fn exp_jacobian(&self, p: &[f64], v: &[f64]) -> Option<DMatrix<f64>> {
        let pc = c(p);
        let s = 1.0 / (1.0 + pc.norm_sqr());
        let u = c(v) * s;
        let r = u.norm();
        // radial map u ↦ tan|u| u/|u|
        let radial = if r < 1e-12 {
            DMatrix::identity(2, 2)
        } else {
            let (ux, uy) = (u.re / r, u.im / r);
            let sec = 1.0 / r.cos();
            let along = sec * sec;
            let across = r.tan() / r;
            let outer = DMatrix::from_row_slice(2, 2, &[ux * ux, ux * uy, ux * uy, uy * uy]);
            &outer * along + (DMatrix::identity(2, 2) - &outer) * across
        };
        let g0 = if r < 1e-300 { Complex64::new(0.0, 0.0) } else { u / r * r.tan() };
        let m = Self::rotate_derivative(pc, g0);
        let mult = DMatrix::from_row_slice(2, 2, &[m.re, -m.im, m.im, m.re]);
        Some(mult * radial * s)
    }

    fn unitary_basis(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2) / self.density(p).sqrt()
    }

    fn connection_coefficients(&self, k: u32, p: &[f64]) -> Vec<f64> {
        let f = k as f64 / (1.0 + p[0] * p[0] + p[1] * p[1]);
        vec![f * p[1], -f * p[0]]
    }

    fn connection_jacobian(&self, k: u32, p: &[f64]) -> Option<Vec<f64>> {
        let (x, y) = (p[0], p[1]);
        let f = 1.0 / (1.0 + x * x + y * y);
        let k = k as f64;
        Some(vec![
            -2.0 * k * x * y * f * f,
            k * (f - 2.0 * y * y * f * f),
            -k * (f - 2.0 * x * x * f * f),
            2.0 * k * x * y * f * f,
        ])
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.len() });
        }
        if !(p[0].hypot(p[1]) <= CP1_CHART_LIMIT) {
            return Err(Error::AtlasCoverage { point: p.to_vec() });
        }
        Ok(())
    }

    // In polar coordinates with r = tan φ the area element becomes
    // sin(2φ) dφ dθ / (2π); composite Simpson in φ.
    fn total_area(&self) -> f64 {
        let m = 2000;
        let h = 0.5 * PI / m as f64;
        let radial: f64 = (0..=m)
            .map(|i| {
                let phi = i as f64 * h;
                let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let r = phi.tan();
                let jac = if i == m { 0.0 } else { r / (PI * (1.0 + r * r).powi(2)) / phi.cos().powi(2) };
                w * jac
            })
            .sum::<f64>()
            * h
            / 3.0;
        2.0 * PI * radial
    }
}

/// `P(ζ) (1 + |ζ|²)^{-k/2}`: a holomorphic section of `O(k)` in the unitary
/// gauge of the affine chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Cp1Section {
    k: u32,
    coeffs: Vec<Complex64>,
}

pub fn cp1_section(k: u32, coeffs: &[Complex64], _backend: &Cp1) -> Result<Cp1Section> {
    if k == 0 {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    let degree = coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)).unwrap_or(0);
    if degree > k as usize {
        return Err(Error::DegreeTooHigh { degree, power: k });
    }
    Ok(Cp1Section { k, coeffs: coeffs[..=degree.min(coeffs.len().saturating_sub(1))].to_vec() })
}

impl Cp1Section {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn poly(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Value in the unitary gauge of the chart `η = 1/ζ`, where the section
    /// reads `η^k P(1/η) (1 + |η|²)^{-k/2}`.
    pub fn value_second_chart(&self, eta: &[f64]) -> Complex64 {
        let e = c(eta);
        let mut acc = Complex64::new(0.0, 0.0);
        // η^k P(1/η) = Σ c_m η^{k-m}
        for (m, coef) in self.coeffs.iter().enumerate() {
            acc += coef * e.powu(self.k - m as u32);
        }
        acc * (1.0 + e.norm_sqr()).powf(-(self.k as f64) / 2.0)
    }
}

impl SectionFamily for Cp1Section {
    fn power(&self) -> u32 {
        self.k
    }

    fn complex_dim(&self) -> usize {
        1
    }

    fn value(&self, p: &[f64]) -> Complex64 {
        let z = c(p);
        self.poly(z).0 * (1.0 + z.norm_sqr()).powf(-(self.k as f64) / 2.0)
    }

    fn gradient(&self, p: &[f64]) -> Option<Vec<Complex64>> {
        let z = c(p);
        let q = 1.0 + z.norm_sqr();
        let w = q.powf(-(self.k as f64) / 2.0);
        let (v, dv) = self.poly(z);
        let k = self.k as f64;
        Some(vec![
            w * (dv - v * (k * p[0] / q)),
            w * (Complex64::i() * dv - v * (k * p[1] / q)),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::compatibility_defect;

    #[test]
    fn unit_area_and_antipode_distance() {
        let b = cp1_backend();
        assert!((b.total_area() - 1.0).abs() < 1e-10);
        assert!(compatibility_defect(&b, &[0.4, -1.2]) < 1e-15);
        // distance to the antipode: half the circumference of the round sphere
        let far = b.distance(&[0.0, 0.0], &[1e9, 0.0]);
        assert!((far - PI * b.radius()).abs() < 1e-8);
        assert!((PI * b.radius() - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_geodesic_matches_ode() {
        let b = cp1_backend();
        for (p, v) in [([0.0, 0.0], [1.0, 0.5]), ([0.3, 0.2], [-0.7, 1.1]), ([1.5, -2.0], [2.0, 3.0])] {
            let (q, dq) = b.geodesic(&p, &v, 0.4).unwrap();
            let (q2, dq2) = b.ode_geodesic(&p, &v, 0.4, 4000);
            assert!((q[0] - q2[0]).abs() + (q[1] - q2[1]).abs() < 1e-9, "{q:?} {q2:?}");
            assert!((dq[0] - dq2[0]).abs() + (dq[1] - dq2[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn geodesic_speed_is_constant() {
        let b = cp1_backend();
        let p = [0.3, 0.2];
        let v = [0.5, -0.4];
        let speed = |t: f64| {
            let (q, dq) = b.geodesic(&p, &v, t).unwrap();
            (b.density(&q) * (dq[0] * dq[0] + dq[1] * dq[1])).sqrt()
        };
        let s0 = speed(0.0);
        for t in [0.3, 0.8, 1.3] {
            assert!((speed(t) / s0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_jacobian_matches_differences() {
        let b = cp1_backend();
        let p = [0.3, 0.2];
        let v = [0.4, -0.3];
        let j = b.exp_jacobian(&p, &v).unwrap();
        let h = 1e-6;
        for a in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[a] += h;
            vm[a] -= h;
            let qp = b.geodesic(&p, &vp, 1.0).unwrap().0;
            let qm = b.geodesic(&p, &vm, 1.0).unwrap().0;
            for r in 0..2 {
                assert!((j[(r, a)] - (qp[r] - qm[r]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn section_degree_and_chart_change() {
        let b = cp1_backend();
        let c1 = Complex64::new(1.0, 0.0);
        assert!(matches!(
            cp1_section(2, &[c1, c1, c1, c1], &b),
            Err(Error::DegreeTooHigh { degree: 3, power: 2 })
        ));
        let coeffs = [Complex64::new(0.5, -1.0), c1, Complex64::new(0.0, 2.0)];
        let s = cp1_section(3, &coeffs, &b).unwrap();
        for p in [[0.7, 0.4], [2.0, -3.0], [-0.2, 0.9]] {
            let eta = b.to_second_chart(&p);
            let lhs = s.value(&p);
            let rhs = b.transition(3, &p) * s.value_second_chart(&eta);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn section_gradient_matches_differences() {
        let b = cp1_backend();
        let s = cp1_section(5, &[Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5)], &b).unwrap();
        let p = [0.4, -0.6];
        let g = s.gradient(&p).unwrap();
        let h = 1e-6;
        for a in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[a] += h;
            pm[a] -= h;
            let fd = (s.value(&pp) - s.value(&pm)) / (2.0 * h);
            assert!((g[a] - fd).norm() < 1e-8);
        }
    }
}
