//! Level-k theta sections of the flat torus.
//!
//! In the gauge `A_k = -iπk (x dy - y dx)` the basis sections are
//!
//! ```text
//! θ_j(z) = Σ_{m ≡ j (mod k)} exp( -(π/k)(m + k y)^2 + i(π k x y + 2π m x) ),
//! ```
//!
//! i.e. `exp(πk(z^2 - |z|^2)/2)` times a classical theta series with
//! characteristic `j/k`. The series is summed outward from the dominant term
//! `m ≈ -k y` until terms drop below [`THETA_TRUNCATION`] times the dominant
//! magnitude.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::torus::FlatTorus;
use super::{PrequantizedKahler, SectionFamily};
use crate::error::{Error, Result};
use crate::linalg::to_real;

/// Relative magnitude at which the lattice series is truncated.
pub const THETA_TRUNCATION: f64 = 1e-16;

/// Coefficients below this fraction of the largest one are dropped when a
/// combination is built from kernel values.
const COEFFICIENT_CUTOFF: f64 = 1e-17;

/// `(θ_j, ∂_x θ_j, ∂_y θ_j)` at `x + iy`.
pub fn theta_basis_jet(k: u32, j: u32, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
    let kf = k as f64;
    let jf = j as f64;
    let n0 = ((-kf * y - jf) / kf).round();
    let term = |n: f64| {
        let m = jf + n * kf;
        let u = m + kf * y;
        let mag = (-(PI / kf) * u * u).exp();
        let phase = PI * kf * x * y + 2.0 * PI * m * x;
        let t = Complex64::from_polar(mag, phase);
        let dx = Complex64::new(0.0, PI * kf * y + 2.0 * PI * m);
        let dy = Complex64::new(-2.0 * PI * u, PI * kf * x);
        (mag, t, t * dx, t * dy)
    };
    let (lead, mut v, mut vx, mut vy) = term(n0);
    for dir in [1.0, -1.0] {
        let mut step = 1.0;
        loop {
            let (mag, t, tx, ty) = term(n0 + dir * step);
            v += t;
            vx += tx;
            vy += ty;
            if mag < THETA_TRUNCATION * lead {
                break;
            }
            step += 1.0;
        }
    }
    (v, vx, vy)
}

pub fn theta_basis(k: u32, j: u32, x: f64, y: f64) -> Complex64 {
    theta_basis_jet(k, j, x, y).0
}

/// `Σ_j c_j θ_j(z_α)` on one complex factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFactor {
    pub coeffs: Vec<(u32, Complex64)>,
}

impl ThetaFactor {
    pub fn basis(j: u32) -> Self {
        Self { coeffs: vec![(j, Complex64::new(1.0, 0.0))] }
    }

    fn jet(&self, k: u32, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        self.coeffs.iter().fold((zero, zero, zero), |acc, &(j, c)| {
            let (v, vx, vy) = theta_basis_jet(k, j, x, y);
            (acc.0 + c * v, acc.1 + c * vx, acc.2 + c * vy)
        })
    }
}

/// `w · Π_α F_α(z_α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTerm {
    pub weight: Complex64,
    pub factors: Vec<ThetaFactor>,
}

/// A section of `L^k` on the flat torus: a sum of products of one-dimensional
/// theta combinations, one factor per complex coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSection {
    k: u32,
    n: usize,
    terms: Vec<ThetaTerm>,
}

impl ThetaSection {
    pub fn from_terms(k: u32, n: usize, terms: Vec<ThetaTerm>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("power must be positive".into()));
        }
        for t in &terms {
            if t.factors.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.factors.len() });
            }
            for f in &t.factors {
                if let Some(&(j, _)) = f.coeffs.iter().find(|(j, _)| *j >= k) {
                    return Err(Error::IndexOutOfRange { index: j as i64, bound: k as i64 });
                }
            }
        }
        Ok(Self { k, n, terms })
    }

    /// Product basis element `θ_{j_1}(z_1) ⋯ θ_{j_n}(z_n)`.
    pub fn product(k: u32, js: &[u32]) -> Result<Self> {
        Self::from_terms(
            k,
            js.len(),
            vec![ThetaTerm {
                weight: Complex64::new(1.0, 0.0),
                factors: js.iter().map(|&j| ThetaFactor::basis(j)).collect(),
            }],
        )
    }

    /// `θ_j - θ_{k-j}` on the one-dimensional torus: odd under `z ↦ -z`, so
    /// it vanishes at the origin for every `k`.
    pub fn odd_pair(k: u32, j: u32) -> Result<Self> {
        if j >= k {
            return Err(Error::IndexOutOfRange { index: j as i64, bound: k as i64 });
        }
        let partner = (k - j) % k;
        if partner == j {
            return Err(Error::InvalidArgument(format!(
                "theta index {j} is its own partner at level {k}"
            )));
        }
        Self::from_terms(
            k,
            1,
            vec![ThetaTerm {
                weight: Complex64::new(1.0, 0.0),
                factors: vec![ThetaFactor {
                    coeffs: vec![(j, Complex64::new(1.0, 0.0)), (partner, Complex64::new(-1.0, 0.0))],
                }],
            }],
        )
    }

    pub fn terms(&self) -> &[ThetaTerm] {
        &self.terms
    }

    /// Value and real gradient at a lifted point.
    pub fn jet(&self, p: &[f64]) -> (Complex64, Vec<Complex64>) {
        let d = 2 * self.n;
        let mut value = Complex64::new(0.0, 0.0);
        let mut grad = vec![Complex64::new(0.0, 0.0); d];
        for term in &self.terms {
            let jets: Vec<_> = term
                .factors
                .iter()
                .enumerate()
                .map(|(a, f)| f.jet(self.k, p[2 * a], p[2 * a + 1]))
                .collect();
            let prod: Complex64 = jets.iter().map(|j| j.0).product();
            value += term.weight * prod;
            for a in 0..self.n {
                let others: Complex64 = jets
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| *b != a)
                    .map(|(_, j)| j.0)
                    .product();
                grad[2 * a] += term.weight * others * jets[a].1;
                grad[2 * a + 1] += term.weight * others * jets[a].2;
            }
        }
        (value, grad)
    }

    /// `max |s(p + λ) - e_λ(p) s(p)|` over the given points and lattice
    /// vectors: zero when the section is consistent with the torus cocycle.
    pub fn cocycle_defect(&self, torus: &FlatTorus, points: &[Vec<f64>], lattice: &[Vec<i64>]) -> f64 {
        let mut worst = 0.0_f64;
        for p in points {
            let s = self.value(p);
            for l in lattice {
                let q: Vec<f64> = p.iter().zip(l).map(|(x, a)| x + *a as f64).collect();
                let lhs = self.value(&q);
                worst = worst.max((lhs - torus.cocycle(self.k, p, l) * s).norm());
            }
        }
        worst
    }
}

impl SectionFamily for ThetaSection {
    fn power(&self) -> u32 {
        self.k
    }

    fn complex_dim(&self) -> usize {
        self.n
    }

    fn value(&self, p: &[f64]) -> Complex64 {
        let mut value = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let prod: Complex64 = term
                .factors
                .iter()
                .enumerate()
                .map(|(a, f)| f.jet(self.k, p[2 * a], p[2 * a + 1]).0)
                .product();
            value += term.weight * prod;
        }
        value
    }

    fn gradient(&self, p: &[f64]) -> Option<Vec<Complex64>> {
        Some(self.jet(p).1)
    }
}

/// Level-`k` basis element `θ_j` on the one-dimensional torus.
pub fn theta_section(k: u32, j: u32, backend: &FlatTorus) -> Result<ThetaSection> {
    if backend.complex_dim() != 1 {
        return Err(Error::InvalidArgument(
            "theta_section expects the one-dimensional torus; use ThetaSection::product".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    if j >= k {
        return Err(Error::IndexOutOfRange { index: j as i64, bound: k as i64 });
    }
    ThetaSection::product(k, &[j])
}

fn kernel_factor(k: u32, q: [f64; 2]) -> (ThetaFactor, f64) {
    let vals: Vec<Complex64> = (0..k).map(|j| theta_basis(k, j, q[0], q[1])).collect();
    let diag: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
    let biggest = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let coeffs = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() >= COEFFICIENT_CUTOFF * biggest)
        .map(|(j, v)| (j as u32, v.conj()))
        .collect();
    (ThetaFactor { coeffs }, diag)
}

/// Normalized coherent section at `q`: `K_k(·, q) / K_k(q, q)` with
/// `K_k(z, q) = Σ_J θ_J(z) conj(θ_J(q))` over the product basis.
fn coherent_term(k: u32, n: usize, q: &[f64], weight: Complex64) -> ThetaTerm {
    let mut factors = Vec::with_capacity(n);
    let mut diag = 1.0;
    for a in 0..n {
        let (f, d) = kernel_factor(k, [q[2 * a], q[2 * a + 1]]);
        factors.push(f);
        diag *= d;
    }
    ThetaTerm { weight: weight / diag, factors }
}

/// `Σ_i w_i e_{q_i} - c e_p` where `e_q` is the normalized coherent section at
/// `q`, `q_i = p + ζ_i / √k`, and `c` is chosen so that the section vanishes at
/// the center `p`.
///
/// Offsets `ζ_i` are given in rescaled units, so the renormalized sections at
/// `p` approach a fixed Bargmann-Fock section as `k` grows.
pub fn coherent_zero_family(
    torus: &FlatTorus,
    k: u32,
    center: &[f64],
    offsets: &[Vec<Complex64>],
    weights: &[Complex64],
) -> Result<ThetaSection> {
    let n = torus.complex_dim();
    torus.check_point(center)?;
    if k == 0 {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    if offsets.len() != weights.len() || offsets.is_empty() {
        return Err(Error::InvalidArgument("need one weight per coherent offset".into()));
    }
    let scale = 1.0 / (k as f64).sqrt();
    let mut terms = Vec::with_capacity(offsets.len() + 1);
    for (zeta, &w) in offsets.iter().zip(weights) {
        if zeta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: zeta.len() });
        }
        let q: Vec<f64> = center
            .iter()
            .zip(to_real(zeta))
            .map(|(p, d)| p + scale * d)
            .collect();
        terms.push(coherent_term(k, n, &q, w));
    }
    let partial = ThetaSection::from_terms(k, n, terms.clone())?;
    let at_center = partial.value(center);
    terms.push(coherent_term(k, n, center, -at_center));
    ThetaSection::from_terms(k, n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::torus_backend;

    #[test]
    fn basis_is_quasi_periodic() {
        let t = torus_backend(1).unwrap();
        let s = theta_section(8, 3, &t).unwrap();
        let pts = vec![vec![0.13, 0.41], vec![0.77, 0.02], vec![0.5, 0.93]];
        let lattice = vec![vec![1, 0], vec![0, 1], vec![-1, 2]];
        assert!(s.cocycle_defect(&t, &pts, &lattice) < 1e-12);
    }

    #[test]
    fn known_zero_locations() {
        // zeros of θ_j at x = (m + 1/2)/k, y = 1/2 - j/k (mod 1)
        let k = 4;
        for j in 0..k {
            for m in 0..k {
                let x = (m as f64 + 0.5) / k as f64;
                let y = (0.5 - j as f64 / k as f64).rem_euclid(1.0);
                assert!(theta_basis(k, j, x, y).norm() < 1e-12, "j={j} m={m}");
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let (v, vx, vy) = theta_basis_jet(8, 3, 0.21, -0.33);
        let h = 1e-6;
        let fx = (theta_basis(8, 3, 0.21 + h, -0.33) - theta_basis(8, 3, 0.21 - h, -0.33)) / (2.0 * h);
        let fy = (theta_basis(8, 3, 0.21, -0.33 + h) - theta_basis(8, 3, 0.21, -0.33 - h)) / (2.0 * h);
        assert!((vx - fx).norm() < 1e-6 * v.norm().max(1.0));
        assert!((vy - fy).norm() < 1e-6 * v.norm().max(1.0));
    }

    #[test]
    fn index_out_of_range() {
        let t = torus_backend(1).unwrap();
        assert!(matches!(theta_section(4, 4, &t), Err(Error::IndexOutOfRange { .. })));
        assert!(ThetaSection::odd_pair(4, 2).is_err());
    }

    #[test]
    fn odd_pair_and_coherent_family_vanish_at_center() {
        let s = ThetaSection::odd_pair(16, 1).unwrap();
        assert!(s.value(&[0.0, 0.0]).norm() < 1e-14);
        let t = torus_backend(2).unwrap();
        let p = [0.1, 0.05, -0.07, 0.02];
        let fam = coherent_zero_family(
            &t,
            16,
            &p,
            &[
                vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0)],
                vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.6)],
            ],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert!(fam.value(&p).norm() < 1e-12);
        let lattice = vec![vec![1, 0, 0, 0], vec![0, 0, 0, 1]];
        assert!(fam.cocycle_defect(&t, &[p.to_vec()], &lattice) < 1e-10);
    }
}
