use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::zeros::ZeroLocus;
use crate::linalg::{smallest_singular_value, standard_complex_structure, standard_symplectic};

/// Metric, symplectic form and complex structure on the ball, pointwise.
pub trait StructureField: Send + Sync {
    fn real_dim(&self) -> usize;

    fn metric(&self, z: &[f64]) -> DMatrix<f64>;

    fn symplectic(&self, z: &[f64]) -> DMatrix<f64>;

    fn complex_structure(&self, z: &[f64]) -> DMatrix<f64>;
}

/// The standard flat Kähler structure of `C^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatStructure {
    pub n: usize,
}

impl StructureField for FlatStructure {
    fn real_dim(&self) -> usize {
        2 * self.n
    }

    fn metric(&self, _z: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2 * self.n, 2 * self.n)
    }

    fn symplectic(&self, _z: &[f64]) -> DMatrix<f64> {
        standard_symplectic(self.n)
    }

    fn complex_structure(&self, _z: &[f64]) -> DMatrix<f64> {
        standard_complex_structure(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMargin {
    /// `None` when the verdict is trivial (`n = 1`) or no point had tangent data.
    pub margin: Option<f64>,
    /// Zero sets in one complex dimension are points; nothing to check.
    pub trivial: bool,
    pub points_used: usize,
    pub excluded_degenerate: usize,
}

/// Minimum over locus points of the smallest singular value of `ω`
/// restricted to the (orthonormal) tangent basis.
pub fn symplectic_margin(locus: &ZeroLocus, omega: &dyn StructureField) -> SymplecticMargin {
    if locus.n < 2 {
        return SymplecticMargin { margin: None, trivial: true, points_used: 0, excluded_degenerate: 0 };
    }
    let mut margin: Option<f64> = None;
    let mut used = 0;
    let mut excluded = 0;
    for p in &locus.points {
        if p.degenerate || p.tangent.is_empty() {
            excluded += 1;
            continue;
        }
        let d = p.point.len();
        let m = p.tangent.len();
        let t = DMatrix::from_fn(d, m, |r, c| p.tangent[c][r]);
        let restricted = t.transpose() * omega.symplectic(&p.point) * &t;
        let sv = smallest_singular_value(&restricted);
        margin = Some(margin.map_or(sv, |x| x.min(sv)));
        used += 1;
    }
    SymplecticMargin { margin, trivial: false, points_used: used, excluded_degenerate: excluded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::zeros::ZeroPoint;

    fn locus_with(tangent: Vec<Vec<f64>>) -> ZeroLocus {
        ZeroLocus {
            n: 2,
            points: vec![ZeroPoint {
                point: vec![0.0; 4],
                tangent,
                residual: 0.0,
                differential_margin: 1.0,
                degenerate: false,
            }],
            seeds: 1,
            converged: 1,
            dropped: 0,
            trimmed: 0,
            scale: 1.0,
            spacing: 0.1,
            radius: 1.0,
        }
    }

    #[test]
    fn complex_line_and_lagrangian_plane() {
        let flat = FlatStructure { n: 2 };
        let complex = locus_with(vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]);
        assert!((symplectic_margin(&complex, &flat).margin.unwrap() - 1.0).abs() < 1e-15);
        let lagrangian = locus_with(vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]]);
        assert!(symplectic_margin(&lagrangian, &flat).margin.unwrap().abs() < 1e-15);
    }
}
