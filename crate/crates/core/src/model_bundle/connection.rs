use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::BallDomain;
use super::stencil::check_reach;
use crate::error::{Error, Result};
use crate::par;

/// Unitary connection 1-form on the trivial line bundle.
///
/// A unitary form is purely imaginary, so implementations report the real
/// coefficients `c_a` with `A(z)(e_a) = i c_a`; the real part of the form is
/// zero by construction.
pub trait ConnectionForm: Send + Sync {
    fn real_dim(&self) -> usize;

    fn coefficients(&self, z: &[f64]) -> Vec<f64>;

    /// `∂_b c_a` at `z`, row-major with row `a`.
    fn coefficient_jacobian(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// A connection form together with the grid it is sampled on.
#[derive(Clone)]
pub struct ConnectionField {
    domain: BallDomain,
    form: Arc<dyn ConnectionForm>,
}

impl std::fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConnectionField").field("domain", &self.domain).finish()
    }
}

impl ConnectionField {
    pub fn new(domain: BallDomain, form: Arc<dyn ConnectionForm>) -> Result<Self> {
        if form.real_dim() != domain.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.real_dim(),
                got: form.real_dim(),
            });
        }
        Ok(Self { domain, form })
    }

    /// The model connection `d - iπ Σ (x_α dy_α - y_α dx_α)`.
    pub fn model(domain: BallDomain) -> Self {
        Self { form: Arc::new(ModelConnection { n: domain.n() }), domain }
    }

    pub fn zero(domain: BallDomain) -> Self {
        Self { form: Arc::new(ZeroConnection { dim: domain.real_dim() }), domain }
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn form(&self) -> &Arc<dyn ConnectionForm> {
        &self.form
    }

    pub fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        self.form.coefficients(z)
    }

    /// `A(z)(v)`, purely imaginary.
    pub fn eval(&self, z: &[f64], v: &[f64]) -> Result<Complex64> {
        let d = self.domain.real_dim();
        if z.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: z.len() });
        }
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        let c = self.form.coefficients(z);
        Ok(Complex64::new(0.0, c.iter().zip(v).map(|(a, b)| a * b).sum()))
    }
}

/// Coefficients of the model connection: `c_{x_α} = π y_α`, `c_{y_α} = -π x_α`.
#[derive(Debug, Clone, Copy)]
pub struct ModelConnection {
    pub n: usize,
}

impl ConnectionForm for ModelConnection {
    fn real_dim(&self) -> usize {
        2 * self.n
    }

    fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        model_coefficients(z)
    }

    fn coefficient_jacobian(&self, _z: &[f64]) -> Option<Vec<f64>> {
        let d = 2 * self.n;
        let mut j = vec![0.0; d * d];
        for a in 0..self.n {
            j[(2 * a) * d + 2 * a + 1] = PI;
            j[(2 * a + 1) * d + 2 * a] = -PI;
        }
        Some(j)
    }
}

pub(crate) fn model_coefficients(z: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; z.len()];
    for (pair, out) in z.chunks_exact(2).zip(c.chunks_exact_mut(2)) {
        out[0] = PI * pair[1];
        out[1] = -PI * pair[0];
    }
    c
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroConnection {
    pub dim: usize,
}

impl ConnectionForm for ZeroConnection {
    fn real_dim(&self) -> usize {
        self.dim
    }
    fn coefficients(&self, _z: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn coefficient_jacobian(&self, _z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim * self.dim])
    }
}

type CoefficientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Connection given by closures for its coefficients (and optionally their
/// Jacobian).
pub struct FnConnection {
    dim: usize,
    coefficients: Box<CoefficientFn>,
    jacobian: Option<Box<CoefficientFn>>,
}

impl FnConnection {
    pub fn new<F>(dim: usize, coefficients: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { dim, coefficients: Box::new(coefficients), jacobian: None }
    }

    pub fn with_jacobian<F>(mut self, jacobian: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }
}

impl ConnectionForm for FnConnection {
    fn real_dim(&self) -> usize {
        self.dim
    }
    fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        (self.coefficients)(z)
    }
    fn coefficient_jacobian(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.jacobian.as_ref().map(|j| j(z))
    }
}

/// `A(z)(v) = -iπ Σ (x_α v_{y_α} - y_α v_{x_α})`.
pub fn model_connection(z: &[f64], v: &[f64]) -> Result<Complex64> {
    if !z.len().is_multiple_of(2) || z.is_empty() {
        return Err(Error::DimensionMismatch { expected: z.len() + z.len() % 2, got: z.len() });
    }
    if v.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), got: v.len() });
    }
    let c = model_coefficients(z);
    Ok(Complex64::new(0.0, c.iter().zip(v).map(|(a, b)| a * b).sum()))
}

/// Curvature 2-form coefficients `F_ab = ∂_a A_b - ∂_b A_a`, purely imaginary
/// and antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTable {
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl CurvatureTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.coeffs[a * self.dim + b]
    }

    /// Coefficient on the `(x_α, y_α)` plane.
    pub fn plane(&self, alpha: usize) -> Complex64 {
        self.get(2 * alpha, 2 * alpha + 1)
    }

    /// Largest deviation from `scale · (-2πi) Σ dx_α ∧ dy_α` over all planes.
    pub fn deviation_from_standard(&self, scale: f64) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..self.dim {
            for b in 0..self.dim {
                let target = if b == a + 1 && a % 2 == 0 {
                    Complex64::new(0.0, -2.0 * PI * scale)
                } else if a == b + 1 && b % 2 == 0 {
                    Complex64::new(0.0, 2.0 * PI * scale)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((self.get(a, b) - target).norm());
            }
        }
        worst
    }
}

/// Curvature of a connection field at `z`.
///
/// Analytic mode uses the form's coefficient Jacobian; finite-difference mode
/// differentiates the coefficients with centered steps of the grid spacing
/// and requires `z` to be at least `2h` inside the ball.
pub fn curvature_of(a: &ConnectionField, z: &[f64], mode: DerivativeMode) -> Result<CurvatureTable> {
    let domain = a.domain();
    domain.check_point(z)?;
    let d = domain.real_dim();
    let jac = match mode {
        DerivativeMode::Analytic => a
            .form()
            .coefficient_jacobian(z)
            .ok_or(Error::NoAnalyticDerivative("connection form"))?,
        DerivativeMode::FiniteDifference => {
            let h = domain.spacing();
            check_reach(domain, z, 2.0 * h)?;
            let mut jac = vec![0.0; d * d];
            let mut p = z.to_vec();
            for b in 0..d {
                p[b] = z[b] + h;
                let cp = a.coefficients(&p);
                p[b] = z[b] - h;
                let cm = a.coefficients(&p);
                p[b] = z[b];
                for r in 0..d {
                    jac[r * d + b] = (cp[r] - cm[r]) / (2.0 * h);
                }
            }
            jac
        }
    };
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for c in 0..d {
            // F_rc = ∂_r A_c - ∂_c A_r with A_c = i c_c
            coeffs[r * d + c] = Complex64::new(0.0, jac[c * d + r] - jac[r * d + c]);
        }
    }
    if coeffs.iter().any(|c| !c.im.is_finite()) {
        return Err(Error::NonFinite("curvature".into()));
    }
    Ok(CurvatureTable { dim: d, coeffs })
}

/// `sup |A(z)(z)|` over the grid nodes: zero exactly when the connection is
/// trivial along rays from the center.
pub fn radial_flatness_defect(a: &ConnectionField) -> f64 {
    let domain = *a.domain();
    let nodes = domain.nodes();
    let per_node = par::map_slice(&nodes, |&f| {
        let z = domain.node_point(f);
        let c = a.coefficients(&z);
        c.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>().abs()
    });
    par::max_of(per_node)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_connection_values() {
        assert_eq!(model_connection(&[0.0, 0.0], &[0.3, -2.0]).unwrap(), Complex64::new(0.0, 0.0));
        let v = model_connection(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - Complex64::new(0.0, -PI)).norm() < 1e-15);
        // radial vectors are annihilated
        let z = [0.3, -0.4, 0.1, 0.7];
        assert!(model_connection(&z, &z).unwrap().norm() < 1e-15);
        assert!(matches!(
            model_connection(&[1.0, 0.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn model_curvature_is_standard() {
        let d = BallDomain::unit(2, 17).unwrap();
        let a = ConnectionField::model(d);
        let z = [0.1, 0.2, -0.3, 0.05];
        let f = curvature_of(&a, &z, DerivativeMode::Analytic).unwrap();
        assert!((f.plane(0) - Complex64::new(0.0, -2.0 * PI)).norm() < 1e-12);
        assert!(f.get(0, 2).norm() < 1e-12);
        let f = curvature_of(&a, &z, DerivativeMode::FiniteDifference).unwrap();
        assert!(f.deviation_from_standard(1.0) < 1e-12);
    }

    #[test]
    fn zero_connection_has_zero_curvature_and_defect() {
        let d = BallDomain::unit(1, 9).unwrap();
        let a = ConnectionField::zero(d);
        let f = curvature_of(&a, &[0.1, 0.1], DerivativeMode::Analytic).unwrap();
        assert_eq!(f.plane(0), Complex64::new(0.0, 0.0));
        assert_eq!(radial_flatness_defect(&a), 0.0);
    }

    #[test]
    fn finite_difference_curvature_needs_interior_point() {
        let d = BallDomain::unit(1, 9).unwrap();
        let a = ConnectionField::model(d);
        let r = curvature_of(&a, &[0.9, 0.0], DerivativeMode::FiniteDifference);
        assert!(matches!(r, Err(Error::StencilExitsDomain { .. })));
    }

    #[test]
    fn radial_defect_of_x_dx_form() {
        // A = -iπ x dx: sup |π x^2| over the unit disk is π, attained at x = ±1
        let d = BallDomain::unit(1, 65).unwrap();
        let a = ConnectionField::new(
            d,
            Arc::new(FnConnection::new(2, |z: &[f64]| vec![-PI * z[0], 0.0])),
        )
        .unwrap();
        assert!((radial_flatness_defect(&a) - PI).abs() < 1e-12);
        assert!(radial_flatness_defect(&ConnectionField::model(d)) < 1e-15);
    }
}
