//! Covariant and Cauchy-Riemann derivatives for the model bundle, and the
//! Gaussian-weighted polynomial sections it holomorphically carries.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::connection::{model_coefficients, DerivativeMode};
use super::domain::BallDomain;
use super::polynomial::Polynomial;
use super::section::{GridSection, Representation, SectionEvaluator, SectionFlag};
use super::stencil::{check_reach, evaluator_gradient, grid_gradient};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, to_complex};
use crate::par;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Value and real gradient of `s` at `z`.
///
/// Finite-difference mode uses the grid stencil when `z` is a node, and
/// centered steps of size `h` on the evaluator otherwise.
pub fn section_jet(
    s: &GridSection,
    z: &[f64],
    mode: DerivativeMode,
) -> Result<(Complex64, Vec<Complex64>)> {
    let domain = s.domain();
    domain.check_point(z)?;
    let (value, grad) = match mode {
        DerivativeMode::Analytic => {
            let e = s.evaluator().ok_or(Error::NoAnalyticDerivative("sampled section"))?;
            let g = e.gradient(z).ok_or(Error::NoAnalyticDerivative("section evaluator"))?;
            (e.value(z), g)
        }
        DerivativeMode::FiniteDifference => match domain.node_at(z) {
            Some(node) => (s.value_at(node), grid_gradient(s, node)?),
            None => {
                let e = s
                    .evaluator()
                    .ok_or_else(|| Error::NotOnGrid { point: z.to_vec() })?;
                let h = domain.spacing();
                check_reach(domain, z, h)?;
                (e.value(z), evaluator_gradient(e.as_ref(), z, h))
            }
        },
    };
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("section derivative at {z:?}")));
    }
    Ok((value, grad))
}

/// `∇_v s (z) = ds(v) + A(z)(v) s(z)` for the model connection.
pub fn covariant_derivative(
    s: &GridSection,
    z: &[f64],
    v: &[f64],
    mode: DerivativeMode,
) -> Result<Complex64> {
    if v.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), got: v.len() });
    }
    let (value, grad) = section_jet(s, z, mode)?;
    let c = model_coefficients(z);
    let ds: Complex64 = grad.iter().zip(v).map(|(g, x)| g * x).sum();
    let a: f64 = c.iter().zip(v).map(|(x, y)| x * y).sum();
    Ok(ds + I * a * value)
}

/// The covariant differential `(∇_{e_a} s)_a` at `z`.
pub fn covariant_differential(
    s: &GridSection,
    z: &[f64],
    mode: DerivativeMode,
) -> Result<Vec<Complex64>> {
    let (value, grad) = section_jet(s, z, mode)?;
    Ok(covariant_from_jet(z, value, &grad))
}

pub(crate) fn covariant_from_jet(z: &[f64], value: Complex64, grad: &[Complex64]) -> Vec<Complex64> {
    let c = model_coefficients(z);
    grad.iter().zip(c).map(|(g, a)| g + I * a * value).collect()
}

/// Components `½(∇_{x_α} + i ∇_{y_α}) s` of the model `∂̄` operator.
pub fn dbar_operator(s: &GridSection, z: &[f64], mode: DerivativeMode) -> Result<Vec<Complex64>> {
    let cov = covariant_differential(s, z, mode)?;
    Ok(cov.chunks_exact(2).map(|p| 0.5 * (p[0] + I * p[1])).collect())
}

/// Components `½(∂_{x_α} + i ∂_{y_α}) f` of the ordinary (connectionless) `∂̄`.
pub fn ordinary_dbar(f: &GridSection, z: &[f64], mode: DerivativeMode) -> Result<Vec<Complex64>> {
    let (_, grad) = section_jet(f, z, mode)?;
    Ok(grad.chunks_exact(2).map(|p| 0.5 * (p[0] + I * p[1])).collect())
}

/// `sup |∂̄ s|` (Euclidean norm of the component vector) over nodes in the
/// sub-ball of radius `r`.
pub fn dbar_defect(s: &GridSection, mode: DerivativeMode, r: f64) -> Result<f64> {
    let domain = *s.domain();
    let nodes = domain.nodes_within(r);
    let per_node = par::try_map_slice(&nodes, |&f| {
        let z = domain.node_point(f);
        let d = dbar_operator(s, &z, mode)?;
        Ok::<f64, Error>(d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    })?;
    Ok(par::max_of(per_node))
}

/// `s · exp(+π/2 Σ|z_α|²)`: model-holomorphic sections become ordinary
/// holomorphic functions.
pub fn unweight(s: &GridSection) -> GridSection {
    reweight(s, 1.0)
}

/// `f · exp(-π/2 Σ|z_α|²)`, inverse of [`unweight`].
pub fn weight(f: &GridSection) -> GridSection {
    reweight(f, -1.0)
}

fn reweight(s: &GridSection, sign: f64) -> GridSection {
    let domain = *s.domain();
    let mut values = s.values().to_vec();
    for f in domain.nodes() {
        let z = domain.node_point(f);
        values[f] *= (sign * 0.5 * PI * norm_sq(&z)).exp();
    }
    let repr = match s.representation() {
        Representation::ClosedForm(e) => {
            Representation::ClosedForm(Arc::new(Weighted { inner: Arc::clone(e), sign }))
        }
        Representation::Sampled => Representation::Sampled,
    };
    GridSection::from_parts(domain, values, repr)
}

/// Sup over nodes in the sub-ball of radius `r` of
/// `|∂̄_∇ s - e^{-π|z|²/2} ∂̄ (unweight s)|`: the two holomorphy criteria
/// agree when this vanishes.
pub fn holomorphy_criteria_gap(s: &GridSection, mode: DerivativeMode, r: f64) -> Result<f64> {
    let f = unweight(s);
    let domain = *s.domain();
    let nodes = domain.nodes_within(r);
    let per_node = par::try_map_slice(&nodes, |&node| {
        let z = domain.node_point(node);
        let cov = dbar_operator(s, &z, mode)?;
        let ord = ordinary_dbar(&f, &z, mode)?;
        let w = (-0.5 * PI * norm_sq(&z)).exp();
        Ok::<f64, Error>(
            cov.iter()
                .zip(&ord)
                .map(|(a, b)| (a - w * b).norm())
                .fold(0.0, f64::max),
        )
    })?;
    Ok(par::max_of(per_node))
}

struct Weighted {
    inner: Arc<dyn SectionEvaluator>,
    sign: f64,
}

impl SectionEvaluator for Weighted {
    fn real_dim(&self) -> usize {
        self.inner.real_dim()
    }

    fn value(&self, z: &[f64]) -> Complex64 {
        self.inner.value(z) * (self.sign * 0.5 * PI * norm_sq(z)).exp()
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let g = self.inner.gradient(z)?;
        let v = self.inner.value(z);
        let e = (self.sign * 0.5 * PI * norm_sq(z)).exp();
        Some(
            g.iter()
                .zip(z)
                .map(|(ga, za)| (ga + self.sign * PI * za * v) * e)
                .collect(),
        )
    }

    fn hessian(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let h = self.inner.hessian(z)?;
        let g = self.inner.gradient(z)?;
        let v = self.inner.value(z);
        let d = z.len();
        let s = self.sign;
        let e = (s * 0.5 * PI * norm_sq(z)).exp();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for a in 0..d {
            for b in 0..d {
                let delta = if a == b { 1.0 } else { 0.0 };
                out[a * d + b] = (h[a * d + b]
                    + s * PI * (z[a] * g[b] + z[b] * g[a])
                    + s * PI * delta * v
                    + PI * PI * z[a] * z[b] * v)
                    * e;
            }
        }
        Some(out)
    }
}

/// `p(z) · exp(-π/2 Σ|z_α|²)` with analytic derivatives.
#[derive(Debug, Clone)]
pub struct BargmannEvaluator {
    poly: Polynomial,
    partials: Vec<Polynomial>,
    second: Vec<Vec<Polynomial>>,
}

impl BargmannEvaluator {
    pub fn new(poly: Polynomial) -> Self {
        let n = poly.n();
        let partials: Vec<Polynomial> = (0..n).map(|a| poly.derivative(a)).collect();
        let second = partials
            .iter()
            .map(|p| (0..n).map(|b| p.derivative(b)).collect())
            .collect();
        Self { poly, partials, second }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

/// `1` on x-axes and `i` on y-axes: `∂_{y} p = i ∂_z p` for holomorphic `p`.
fn axis_factor(a: usize) -> Complex64 {
    if a.is_multiple_of(2) {
        Complex64::new(1.0, 0.0)
    } else {
        I
    }
}

impl SectionEvaluator for BargmannEvaluator {
    fn real_dim(&self) -> usize {
        2 * self.poly.n()
    }

    fn value(&self, z: &[f64]) -> Complex64 {
        let w = to_complex(z);
        self.poly.eval(&w) * (-0.5 * PI * norm_sq(z)).exp()
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let w = to_complex(z);
        let g = (-0.5 * PI * norm_sq(z)).exp();
        let p = self.poly.eval(&w);
        let dp: Vec<Complex64> = self.partials.iter().map(|q| q.eval(&w)).collect();
        Some(
            (0..z.len())
                .map(|a| (axis_factor(a) * dp[a / 2] - PI * z[a] * p) * g)
                .collect(),
        )
    }

    fn hessian(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let w = to_complex(z);
        let d = z.len();
        let g = (-0.5 * PI * norm_sq(z)).exp();
        let p = self.poly.eval(&w);
        let dp: Vec<Complex64> = self.partials.iter().map(|q| q.eval(&w)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for a in 0..d {
            let da = axis_factor(a) * dp[a / 2];
            for b in 0..d {
                let db = axis_factor(b) * dp[b / 2];
                let dab = axis_factor(a) * axis_factor(b) * self.second[a / 2][b / 2].eval(&w);
                let delta = if a == b { 1.0 } else { 0.0 };
                // ∂_b[(D_a p - π z_a p) G]
                out[a * d + b] = (dab - PI * z[a] * db - PI * delta * p
                    - PI * z[b] * (da - PI * z[a] * p))
                    * g;
            }
        }
        Some(out)
    }
}

/// Closed-form section `p(z) exp(-π|z|²/2)`. An empty coefficient table gives
/// the zero section flagged [`SectionFlag::EmptyPolynomial`].
pub fn bargmann_section(poly: &Polynomial, domain: BallDomain) -> Result<GridSection> {
    if poly.n() != domain.n() {
        return Err(Error::DimensionMismatch { expected: domain.n(), got: poly.n() });
    }
    if poly.is_empty() {
        return Ok(GridSection::zero(domain).with_flag(SectionFlag::EmptyPolynomial));
    }
    GridSection::from_evaluator(domain, Arc::new(BargmannEvaluator::new(poly.clone())))
}
