use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::PrequantizedKahler;
use crate::error::{Error, Result};
use crate::linalg::{standard_complex_structure, standard_symplectic};

/// The square flat torus `C^n / (Z^n + i Z^n)` with `ω = Σ dx_α ∧ dy_α`.
///
/// Points are handled on the universal cover. The declared gauge of `L^k` is
/// `A_k = -iπk Σ (x_α dy_α - y_α dx_α)`; lattice translation by
/// `λ = a + ib` acts on sections by the cocycle
/// `s(z + λ) = exp(iπk Σ_α (a_α y_α - b_α x_α + a_α b_α)) s(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatTorus {
    n: usize,
}

pub fn torus_backend(n: usize) -> Result<FlatTorus> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidArgument(format!("torus dimension must be 1 or 2, got {n}")));
    }
    Ok(FlatTorus { n })
}

impl FlatTorus {
    /// Representative of `p` in `[0, 1)^{2n}` and the lattice vector
    /// `λ` (interleaved integers) with `p = reduced + λ`.
    pub fn reduce(&self, p: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let lattice: Vec<i64> = p.iter().map(|x| x.floor() as i64).collect();
        let reduced = p.iter().zip(&lattice).map(|(x, l)| x - *l as f64).collect();
        (reduced, lattice)
    }

    /// Factor `e` with `s(p + λ) = e · s(p)` for sections of `L^k`.
    pub fn cocycle(&self, k: u32, p: &[f64], lattice: &[i64]) -> Complex64 {
        let k = k as f64;
        let mut phase = 0.0;
        for (pair, l) in p.chunks_exact(2).zip(lattice.chunks_exact(2)) {
            let (a, b) = (l[0] as f64, l[1] as f64);
            phase += a * pair[1] - b * pair[0] + a * b;
        }
        Complex64::from_polar(1.0, PI * k * phase)
    }

    /// Geodesic endpoint reduced to the fundamental domain.
    pub fn geodesic_mod_lattice(&self, p: &[f64], v: &[f64], t: f64) -> Vec<f64> {
        let q: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + t * b).collect();
        self.reduce(&q).0
    }
}

impl PrequantizedKahler for FlatTorus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn complex_dim(&self) -> usize {
        self.n
    }

    fn metric(&self, _p: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2 * self.n, 2 * self.n)
    }

    fn symplectic(&self, _p: &[f64]) -> DMatrix<f64> {
        standard_symplectic(self.n)
    }

    fn complex_structure(&self, _p: &[f64]) -> DMatrix<f64> {
        standard_complex_structure(self.n)
    }

    fn geodesic(&self, p: &[f64], v: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if p.len() != 2 * self.n || v.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: p.len().min(v.len()) });
        }
        Ok((p.iter().zip(v).map(|(a, b)| a + t * b).collect(), v.to_vec()))
    }

    fn exp_jacobian(&self, _p: &[f64], _v: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(2 * self.n, 2 * self.n))
    }

    fn unitary_basis(&self, _p: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2 * self.n, 2 * self.n)
    }

    fn connection_coefficients(&self, k: u32, p: &[f64]) -> Vec<f64> {
        let k = k as f64;
        let mut c = vec![0.0; p.len()];
        for (pair, out) in p.chunks_exact(2).zip(c.chunks_exact_mut(2)) {
            out[0] = PI * k * pair[1];
            out[1] = -PI * k * pair[0];
        }
        c
    }

    fn connection_jacobian(&self, k: u32, _p: &[f64]) -> Option<Vec<f64>> {
        let d = 2 * self.n;
        let k = k as f64;
        let mut j = vec![0.0; d * d];
        for a in 0..self.n {
            j[(2 * a) * d + 2 * a + 1] = PI * k;
            j[(2 * a + 1) * d + 2 * a] = -PI * k;
        }
        Some(j)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::AtlasCoverage { point: p.to_vec() });
        }
        Ok(())
    }

    fn total_area(&self) -> f64 {
        // midpoint rule for ∫ ω^n / n! over the unit cube; the integrand is
        // the Pfaffian of ω, constant here
        let m = 8usize;
        let cells = m.pow(2 * self.n as u32);
        let vol = 1.0 / cells as f64;
        (0..cells)
            .map(|c| {
                let p: Vec<f64> = (0..2 * self.n)
                    .map(|a| ((c / m.pow(a as u32)) % m) as f64 / m as f64 + 0.5 / m as f64)
                    .collect();
                pfaffian(&self.symplectic(&p)) * vol
            })
            .sum()
    }
}

/// Pfaffian of an antisymmetric matrix of size 2 or 4.
pub(crate) fn pfaffian(w: &DMatrix<f64>) -> f64 {
    match w.nrows() {
        2 => w[(0, 1)],
        4 => w[(0, 1)] * w[(2, 3)] - w[(0, 2)] * w[(1, 3)] + w[(0, 3)] * w[(1, 2)],
        _ => f64::NAN,
    }
}
