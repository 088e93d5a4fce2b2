use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{realify_row, singular_values_2xm};
use crate::model_bundle::{covariant_differential, DerivativeMode, GridSection};
use crate::par;

/// Smallness threshold for the near-zero set `{|σ| ≤ ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Epsilon {
    Absolute(f64),
    /// Fraction of `max |σ|` over the grid.
    RelativeToMax(f64),
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon::RelativeToMax(0.1)
    }
}

impl Epsilon {
    pub fn resolve(self, s: &GridSection) -> Result<f64> {
        let eps = match self {
            Epsilon::Absolute(e) => e,
            Epsilon::RelativeToMax(f) => f * s.max_abs(),
        };
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("smallness threshold must be positive, got {eps}")));
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalityMargin {
    /// `None` when no node satisfies `|σ| ≤ ε` (the margin is `+∞`).
    pub margin: Option<f64>,
    pub threshold: f64,
    pub near_zero_nodes: usize,
}

impl TransversalityMargin {
    pub fn value(&self) -> f64 {
        self.margin.unwrap_or(f64::INFINITY)
    }

    pub fn is_vacuous(&self) -> bool {
        self.margin.is_none()
    }
}

/// Minimum over nodes with `|σ| ≤ ε` of the smallest singular value of the
/// real `2 x 2n` matrix of `∇σ`.
///
/// Only nodes whose first-derivative stencil fits in the ball are examined.
pub fn transversality_margin(
    s: &GridSection,
    eps: Epsilon,
    mode: DerivativeMode,
) -> Result<TransversalityMargin> {
    let threshold = eps.resolve(s)?;
    let domain = *s.domain();
    let h = domain.spacing();
    let nodes: Vec<usize> = domain
        .nodes_within(domain.radius() - h * (1.0 + 1e-9))
        .into_iter()
        .filter(|&f| s.value_at(f).norm() <= threshold)
        .collect();
    let per_node = par::try_map_slice(&nodes, |&f| {
        let z = domain.node_point(f);
        let d = covariant_differential(s, &z, mode)?;
        let (r0, r1) = realify_row(&d);
        Ok::<f64, Error>(singular_values_2xm(&r0, &r1).0)
    })?;
    let margin = per_node.into_iter().reduce(f64::min);
    Ok(TransversalityMargin { margin, threshold, near_zero_nodes: nodes.len() })
}
