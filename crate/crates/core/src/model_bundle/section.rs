use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::domain::BallDomain;
use crate::error::{Error, Result};
use crate::par;

/// Pointwise evaluator of a section of the trivial bundle over the ball.
///
/// Gradients are the real partial derivatives `∂/∂x_a` in interleaved
/// coordinates; Hessians are row-major `2n x 2n`. Evaluators without analytic
/// derivatives return `None` and callers fall back to finite differences.
pub trait SectionEvaluator: Send + Sync {
    fn real_dim(&self) -> usize;

    fn value(&self, z: &[f64]) -> Complex64;

    fn gradient(&self, _z: &[f64]) -> Option<Vec<Complex64>> {
        None
    }

    fn hessian(&self, _z: &[f64]) -> Option<Vec<Complex64>> {
        None
    }
}

/// How a [`GridSection`] was produced.
#[derive(Clone)]
pub enum Representation {
    /// Samples of an evaluator; node values agree with it exactly.
    ClosedForm(Arc<dyn SectionEvaluator>),
    Sampled,
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::ClosedForm(_) => f.write_str("ClosedForm"),
            Representation::Sampled => f.write_str("Sampled"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionFlag {
    /// Built from an empty coefficient table; the section is identically zero.
    EmptyPolynomial,
}

/// Complex samples of a section over the nodes of a [`BallDomain`].
///
/// Values are stored over the whole cube; entries outside the ball are zero
/// and never read by stencils.
#[derive(Debug, Clone)]
pub struct GridSection {
    domain: BallDomain,
    values: Vec<Complex64>,
    repr: Representation,
    flags: Vec<SectionFlag>,
}

impl GridSection {
    pub fn from_evaluator(domain: BallDomain, eval: Arc<dyn SectionEvaluator>) -> Result<Self> {
        if eval.real_dim() != domain.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.real_dim(),
                got: eval.real_dim(),
            });
        }
        let nodes = domain.nodes();
        let samples = par::map_slice(&nodes, |&f| eval.value(&domain.node_point(f)));
        let values = scatter(&domain, &nodes, samples, "section evaluator")?;
        Ok(Self { domain, values, repr: Representation::ClosedForm(eval), flags: Vec::new() })
    }

    /// Samples `f` at the nodes; the result carries no evaluator.
    pub fn sample<F>(domain: BallDomain, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let nodes = domain.nodes();
        let samples = par::map_slice(&nodes, |&i| f(&domain.node_point(i)));
        let values = scatter(&domain, &nodes, samples, "sampled section")?;
        Ok(Self { domain, values, repr: Representation::Sampled, flags: Vec::new() })
    }

    /// Sampled section from node values given in [`BallDomain::nodes`] order.
    pub fn from_node_values(domain: BallDomain, node_values: Vec<Complex64>) -> Result<Self> {
        let nodes = domain.nodes();
        if nodes.len() != node_values.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: node_values.len() });
        }
        let values = scatter(&domain, &nodes, node_values, "sampled section")?;
        Ok(Self { domain, values, repr: Representation::Sampled, flags: Vec::new() })
    }

    /// Attaches a pointwise evaluator to node values that already agree with it.
    pub(crate) fn from_parts(
        domain: BallDomain,
        values: Vec<Complex64>,
        repr: Representation,
    ) -> Self {
        Self { domain, values, repr, flags: Vec::new() }
    }

    pub fn zero(domain: BallDomain) -> Self {
        let eval: Arc<dyn SectionEvaluator> = Arc::new(ZeroEvaluator { dim: domain.real_dim() });
        Self {
            values: vec![Complex64::new(0.0, 0.0); domain.cube_len()],
            domain,
            repr: Representation::ClosedForm(eval),
            flags: Vec::new(),
        }
    }

    pub fn with_flag(mut self, flag: SectionFlag) -> Self {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        self
    }

    pub fn flags(&self) -> &[SectionFlag] {
        &self.flags
    }

    pub fn has_flag(&self, flag: SectionFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    /// Cube-indexed values (zero outside the ball).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, flat: usize) -> Complex64 {
        self.values[flat]
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn evaluator(&self) -> Option<&Arc<dyn SectionEvaluator>> {
        match &self.repr {
            Representation::ClosedForm(e) => Some(e),
            Representation::Sampled => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Representation::ClosedForm(_))
    }

    /// Drops the evaluator, keeping only the samples.
    pub fn into_sampled(mut self) -> Self {
        self.repr = Representation::Sampled;
        self
    }

    pub fn max_abs(&self) -> f64 {
        par::max_of(self.domain.nodes().into_iter().map(|f| self.values[f].norm()))
    }

    /// Off-grid evaluator: the closed form when present, otherwise a local
    /// tensor-product cubic interpolant of the samples.
    pub fn point_evaluator(&self) -> Arc<dyn SectionEvaluator> {
        match &self.repr {
            Representation::ClosedForm(e) => Arc::clone(e),
            Representation::Sampled => Arc::new(GridInterpolant {
                domain: self.domain,
                values: self.values.clone(),
            }),
        }
    }

    /// `Σ c_i s_i` over sections on the same grid. Closed form when every
    /// input is.
    pub fn linear_combination(terms: &[(Complex64, &GridSection)]) -> Result<GridSection> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let domain = first.1.domain;
        if terms.iter().any(|(_, s)| s.domain != domain) {
            return Err(Error::GridMismatch);
        }
        let mut values = vec![Complex64::new(0.0, 0.0); domain.cube_len()];
        for (c, s) in terms {
            values.iter_mut().zip(&s.values).for_each(|(v, x)| *v += c * x);
        }
        let closed: Option<Vec<(Complex64, Arc<dyn SectionEvaluator>)>> = terms
            .iter()
            .map(|(c, s)| s.evaluator().map(|e| (*c, Arc::clone(e))))
            .collect();
        let repr = match closed {
            Some(parts) => Representation::ClosedForm(Arc::new(Combination { parts })),
            None => Representation::Sampled,
        };
        Ok(GridSection { domain, values, repr, flags: Vec::new() })
    }

    pub fn difference(&self, other: &GridSection) -> Result<GridSection> {
        let one = Complex64::new(1.0, 0.0);
        GridSection::linear_combination(&[(one, self), (-one, other)])
    }

    pub fn scaled(&self, c: Complex64) -> GridSection {
        GridSection::linear_combination(&[(c, self)]).expect("single-term combination")
    }
}

fn scatter(
    domain: &BallDomain,
    nodes: &[usize],
    samples: Vec<Complex64>,
    what: &str,
) -> Result<Vec<Complex64>> {
    let mut values = vec![Complex64::new(0.0, 0.0); domain.cube_len()];
    for (&f, v) in nodes.iter().zip(samples) {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(format!("{what} at {:?}", domain.node_point(f))));
        }
        values[f] = v;
    }
    Ok(values)
}

struct ZeroEvaluator {
    dim: usize,
}

impl SectionEvaluator for ZeroEvaluator {
    fn real_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _z: &[f64]) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn gradient(&self, _z: &[f64]) -> Option<Vec<Complex64>> {
        Some(vec![Complex64::new(0.0, 0.0); self.dim])
    }
    fn hessian(&self, _z: &[f64]) -> Option<Vec<Complex64>> {
        Some(vec![Complex64::new(0.0, 0.0); self.dim * self.dim])
    }
}

struct Combination {
    parts: Vec<(Complex64, Arc<dyn SectionEvaluator>)>,
}

impl SectionEvaluator for Combination {
    fn real_dim(&self) -> usize {
        self.parts[0].1.real_dim()
    }

    fn value(&self, z: &[f64]) -> Complex64 {
        self.parts.iter().map(|(c, e)| c * e.value(z)).sum()
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.real_dim()];
        for (c, e) in &self.parts {
            let g = e.gradient(z)?;
            acc.iter_mut().zip(g).for_each(|(a, x)| *a += c * x);
        }
        Some(acc)
    }

    fn hessian(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        let d = self.real_dim();
        let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
        for (c, e) in &self.parts {
            let h = e.hessian(z)?;
            acc.iter_mut().zip(h).for_each(|(a, x)| *a += c * x);
        }
        Some(acc)
    }
}

/// Tensor-product Lagrange interpolant of grid samples: cubic where the
/// 4-point stencil fits inside the ball, multilinear otherwise.
/// Per-axis base indices, weights and derivative weights.
type Stencil = (Vec<usize>, Vec<Vec<f64>>, Vec<Vec<f64>>);

struct GridInterpolant {
    domain: BallDomain,
    values: Vec<Complex64>,
}

impl GridInterpolant {
    fn stencil(&self, z: &[f64], order: usize) -> Option<Stencil> {
        let h = self.domain.spacing();
        let r = self.domain.radius();
        let p = self.domain.points_per_axis() as isize;
        let mut base = Vec::with_capacity(z.len());
        let mut weights = Vec::with_capacity(z.len());
        let mut dweights = Vec::with_capacity(z.len());
        for &x in z {
            let t = (x + r) / h;
            let mut i0 = t.floor() as isize;
            let lo = if order == 4 { i0 - 1 } else { i0 };
            let lo = lo.clamp(0, p - order as isize);
            i0 = lo;
            let nodes: Vec<f64> = (0..order).map(|j| (i0 + j as isize) as f64).collect();
            let (w, dw) = lagrange_weights(&nodes, t);
            base.push(i0 as usize);
            weights.push(w);
            dweights.push(dw.into_iter().map(|d| d / h).collect());
        }
        // every stencil node must be inside the ball
        let d = z.len();
        let count = order.pow(d as u32);
        for c in 0..count {
            let idx = corner(c, order, d, &base);
            if !self.domain.is_node(self.domain.flat_index(&idx)) {
                return None;
            }
        }
        Some((base, weights, dweights))
    }

    fn eval_with(&self, z: &[f64]) -> Option<(Complex64, Vec<Complex64>)> {
        let d = z.len();
        let (order, (base, w, dw)): (usize, _) = match self.stencil(z, 4) {
            Some(s) => (4, s),
            None => (2, self.stencil(z, 2)?),
        };
        let mut value = Complex64::new(0.0, 0.0);
        let mut grad = vec![Complex64::new(0.0, 0.0); d];
        for c in 0..order.pow(d as u32) {
            let idx = corner(c, order, d, &base);
            let local: Vec<usize> = idx.iter().zip(&base).map(|(i, b)| i - b).collect();
            let v = self.values[self.domain.flat_index(&idx)];
            let prod: f64 = local.iter().enumerate().map(|(a, &j)| w[a][j]).product();
            value += v * prod;
            for a in 0..d {
                let mut g = dw[a][local[a]];
                for (b, &j) in local.iter().enumerate() {
                    if b != a {
                        g *= w[b][j];
                    }
                }
                grad[a] += v * g;
            }
        }
        Some((value, grad))
    }
}

fn corner(c: usize, order: usize, d: usize, base: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; d];
    let mut rest = c;
    for a in (0..d).rev() {
        idx[a] = base[a] + rest % order;
        rest /= order;
    }
    idx
}

/// Lagrange basis weights and their derivatives at `t` for the given nodes.
fn lagrange_weights(nodes: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let m = nodes.len();
    let mut w = vec![0.0; m];
    let mut dw = vec![0.0; m];
    for j in 0..m {
        let mut num = 1.0;
        let mut den = 1.0;
        for k in 0..m {
            if k != j {
                num *= t - nodes[k];
                den *= nodes[j] - nodes[k];
            }
        }
        w[j] = num / den;
        let mut d = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            d += nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j && k != l)
                .map(|(_, x)| t - x)
                .product::<f64>();
        }
        dw[j] = d / den;
    }
    (w, dw)
}

impl SectionEvaluator for GridInterpolant {
    fn real_dim(&self) -> usize {
        self.domain.real_dim()
    }

    fn value(&self, z: &[f64]) -> Complex64 {
        self.eval_with(z)
            .map(|(v, _)| v)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<Complex64>> {
        self.eval_with(z).map(|(_, g)| g)
    }
}
