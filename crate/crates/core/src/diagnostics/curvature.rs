use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::structure::StructureField;
use super::zeros::ZeroLocus;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_entry, realify_row};
use crate::model_bundle::stencil::{check_reach, evaluator_gradient, evaluator_hessian};
use crate::model_bundle::GridSection;
use crate::par;

/// Step for Hessians of evaluators without a closed-form one.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    /// Supremum of `|K|` over locus points and coordinate tangent planes;
    /// `None` for trivial (`n = 1`) or empty loci.
    pub sup: Option<f64>,
    pub trivial: bool,
    pub points_used: usize,
    pub excluded_degenerate: usize,
    /// `max |g - I|` at the locus points: curvature is taken in the flat chart
    /// metric, so this bounds the neglected metric correction.
    pub metric_deviation: f64,
}

/// Sectional curvatures of the zero set of `σ` through the Gauss equation,
/// with second fundamental form
/// `II(u, v) = -M^T (M M^T)^{-1} (u^T H_re v, u^T H_im v)`,
/// `M` the real differential of `σ` and `H` its Hessians.
pub fn curvature_estimate(locus: &ZeroLocus, s: &GridSection, g: &dyn StructureField) -> Result<CurvatureEstimate> {
    if locus.n < 2 {
        return Ok(CurvatureEstimate {
            sup: None,
            trivial: true,
            points_used: 0,
            excluded_degenerate: 0,
            metric_deviation: 0.0,
        });
    }
    let eval = s.point_evaluator();
    let domain = *s.domain();
    let usable: Vec<_> = locus.points.iter().filter(|p| !p.degenerate && !p.tangent.is_empty()).collect();
    let excluded = locus.points.len() - usable.len();
    let per_point = par::try_map_slice(&usable, |p| {
        let z = &p.point;
        let d = z.len();
        let hess = match eval.hessian(z) {
            Some(h) => h,
            None => {
                check_reach(&domain, z, HESSIAN_STEP)?;
                evaluator_hessian(eval.as_ref(), z, HESSIAN_STEP)
            }
        };
        let grad = eval.gradient(z).unwrap_or_else(|| evaluator_gradient(eval.as_ref(), z, 1e-6));
        let (r0, r1) = realify_row(&grad);
        let m = DMatrix::from_fn(2, d, |r, c| if r == 0 { r0[c] } else { r1[c] });
        let gram = Matrix2::new(m.row(0).dot(&m.row(0)), m.row(0).dot(&m.row(1)), m.row(1).dot(&m.row(0)), m.row(1).dot(&m.row(1)));
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument(format!("degenerate differential at {z:?}")))?;
        let h_re = DMatrix::from_fn(d, d, |a, b| hess[a * d + b].re);
        let h_im = DMatrix::from_fn(d, d, |a, b| hess[a * d + b].im);
        let ii = |u: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
            let b = Vector2::new((u.transpose() * &h_re * v)[0], (u.transpose() * &h_im * v)[0]);
            let y = inv * b;
            -(m.transpose() * DVector::from_column_slice(&[y[0], y[1]]))
        };
        let basis: Vec<DVector<f64>> = p.tangent.iter().map(|t| DVector::from_column_slice(t)).collect();
        let mut worst = 0.0_f64;
        for i in 0..basis.len() {
            for j in (i + 1)..basis.len() {
                let k = ii(&basis[i], &basis[i]).dot(&ii(&basis[j], &basis[j])) - ii(&basis[i], &basis[j]).norm_squared();
                worst = worst.max(k.abs());
            }
        }
        let dev = max_abs_entry(&(g.metric(z) - DMatrix::identity(d, d)));
        Ok::<(f64, f64), Error>((worst, dev))
    })?;
    let sup = per_point.iter().map(|x| x.0).reduce(f64::max);
    let metric_deviation = per_point.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(CurvatureEstimate {
        sup,
        trivial: false,
        points_used: usable.len(),
        excluded_degenerate: excluded,
        metric_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{zero_locus, FlatStructure};
    use crate::model_bundle::{bargmann_section, BallDomain, Polynomial};
    use num_complex::Complex64;

    #[test]
    fn linear_zero_set_is_flat() {
        let d = BallDomain::unit(2, 13).unwrap();
        let s = bargmann_section(&Polynomial::coordinate(2, 0), d).unwrap();
        let z = zero_locus(&s).unwrap();
        let u = curvature_estimate(&z, &s, &FlatStructure { n: 2 }).unwrap();
        assert!(u.sup.unwrap() < 1e-8);
    }

    #[test]
    fn round_sphere_in_a_slice() {
        let r = 0.6;
        let d = BallDomain::unit(2, 17).unwrap();
        let s = GridSection::sample(d, |z| {
            Complex64::new(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - r * r, z[3])
        })
        .unwrap();
        let z = zero_locus(&s).unwrap();
        let u = curvature_estimate(&z, &s, &FlatStructure { n: 2 }).unwrap();
        let k = u.sup.unwrap();
        assert!((k * r * r - 1.0).abs() < 0.05, "K = {k}");
    }
}
