//! Small dense helpers shared by the pipeline stages.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Interleaved real coordinates `(x_1, y_1, ...)` to complex coordinates.
pub fn to_complex(real: &[f64]) -> Vec<Complex64> {
    real.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

/// Complex coordinates to interleaved real coordinates.
pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Singular values of a real `2 x m` matrix given by its rows, ascending.
pub fn singular_values_2xm(r0: &[f64], r1: &[f64]) -> (f64, f64) {
    let a = dot(r0, r0);
    let b = dot(r0, r1);
    let d = dot(r1, r1);
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let hi2 = mean + disc;
    // lo^2 = det / hi^2 avoids cancellation in mean - disc
    let det = (a * d - b * b).max(0.0);
    let lo2 = if hi2 > 0.0 { det / hi2 } else { 0.0 };
    (lo2.sqrt(), hi2.sqrt())
}

/// Real `2 x 2n` matrix of the real-linear map `v ↦ Σ_a c_a v_a` into `C = R^2`.
pub fn realify_row(c: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        c.iter().map(|x| x.re).collect(),
        c.iter().map(|x| x.im).collect(),
    )
}

/// Solves `(M M^T + mu I) y = f` for a `2 x m` matrix `M` and returns `M^T y`,
/// the minimum-norm solution of `M x = f` when `mu = 0`.
pub fn min_norm_solve_2xm(r0: &[f64], r1: &[f64], f: [f64; 2], mu: f64) -> Option<Vec<f64>> {
    let a = dot(r0, r0) + mu;
    let b = dot(r0, r1);
    let d = dot(r1, r1) + mu;
    let det = a * d - b * b;
    if !(det.abs() > f64::MIN_POSITIVE) || !det.is_finite() {
        return None;
    }
    let y0 = (d * f[0] - b * f[1]) / det;
    let y1 = (a * f[1] - b * f[0]) / det;
    Some(r0.iter().zip(r1).map(|(p, q)| p * y0 + q * y1).collect())
}

/// Orthonormal basis of the orthogonal complement of `rows` in `R^dim`
/// (Gram-Schmidt against the rows, then against the standard basis).
pub fn orthonormal_complement(rows: &[&[f64]], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let push = |v: &[f64], basis: &mut Vec<Vec<f64>>| -> bool {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&w);
        if n > 1e-8 {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
            true
        } else {
            false
        }
    };
    let mut row_count = 0;
    for r in rows {
        if push(r, &mut basis) {
            row_count += 1;
        }
    }
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        push(&e, &mut basis);
    }
    basis.split_off(row_count)
}

/// Smallest singular value of a dense real matrix.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// `max |U^* U - I|` for a square complex matrix stored row-major.
pub fn unitarity_defect(u: &[Complex64], n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n {
                acc += u[r * n + i].conj() * u[r * n + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// Standard symplectic matrix `Σ dx_α ∧ dy_α` in interleaved coordinates.
pub fn standard_symplectic(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        m[(2 * a, 2 * a + 1)] = 1.0;
        m[(2 * a + 1, 2 * a)] = -1.0;
    }
    m
}

/// Standard complex structure `J ∂x = ∂y`, as a matrix acting on columns.
pub fn standard_complex_structure(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        m[(2 * a + 1, 2 * a)] = 1.0;
        m[(2 * a, 2 * a + 1)] = -1.0;
    }
    m
}

/// Largest absolute entry.
pub fn max_abs_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_two_rows_in_r4() {
        let r0 = [1.0, 0.0, 0.0, 0.0];
        let r1 = [0.0, 1.0, 1.0, 0.0];
        let basis = orthonormal_complement(&[&r0, &r1], 4);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(dot(b, &r0).abs() < 1e-14);
            assert!(dot(b, &r1).abs() < 1e-14);
            assert!((norm(b) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_complex_linear_functional_coincide() {
        // real matrix of a complex-linear functional on C^1
        let c = [Complex64::new(2.0, 1.0), Complex64::new(-1.0, 2.0)];
        let (r0, r1) = realify_row(&c);
        let (lo, hi) = singular_values_2xm(&r0, &r1);
        assert!((lo - 5f64.sqrt()).abs() < 1e-12);
        assert!((hi - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn min_norm_solution_satisfies_system() {
        let r0 = [1.0, 2.0, 0.0];
        let r1 = [0.0, 1.0, -1.0];
        let x = min_norm_solve_2xm(&r0, &r1, [3.0, 1.0], 0.0).unwrap();
        assert!((dot(&r0, &x) - 3.0).abs() < 1e-12);
        assert!((dot(&r1, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn structure_matrices_are_compatible() {
        let j = standard_complex_structure(2);
        let w = standard_symplectic(2);
        // g(u, v) = ω(u, J v) must be the identity
        let g = &w * &j;
        assert!((g - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }
}
