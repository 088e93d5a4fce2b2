use serde::{Deserialize, Serialize};

use crate::diagnostics::cm_norm;
use crate::error::{Error, Result};
use crate::model_bundle::GridSection;

/// The last rung of a ladder together with the evidence that the ladder is
/// Cauchy in `C^m` on a sub-ball.
#[derive(Debug, Clone)]
pub struct LimitCandidate {
    pub section: GridSection,
    pub summary: LimitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub ladder: Vec<u32>,
    /// `C^m` distance between consecutive rungs, one per ladder pair.
    pub distances: Vec<f64>,
    pub order: usize,
    pub subball_radius: f64,
    /// Distances strictly decrease along the ladder.
    pub cauchy: bool,
}

/// Consecutive `C^m` distances on the sub-ball of radius `r`; the final rung is
/// the candidate. Non-decreasing distances are flagged, not rejected.
pub fn limit_extract(sections: &[GridSection], ladder: &[u32], m: usize, r: f64) -> Result<LimitCandidate> {
    if sections.len() < 3 {
        return Err(Error::InvalidArgument(format!("a ladder needs at least 3 rungs, got {}", sections.len())));
    }
    if ladder.len() != sections.len() {
        return Err(Error::DimensionMismatch { expected: sections.len(), got: ladder.len() });
    }
    if m > 3 {
        return Err(Error::InvalidArgument(format!("seminorm order {m} exceeds 3")));
    }
    let domain = *sections[0].domain();
    if sections.iter().any(|s| *s.domain() != domain) {
        return Err(Error::GridMismatch);
    }
    if !(r < domain.radius()) {
        return Err(Error::InvalidDomain(format!("sub-ball radius {r} must be below grid radius {}", domain.radius())));
    }
    let mut distances = Vec::with_capacity(sections.len() - 1);
    for pair in sections.windows(2) {
        // differences of samples only; evaluators play no role in the seminorm
        let diff = pair[1].clone().into_sampled().difference(&pair[0].clone().into_sampled())?;
        distances.push(cm_norm(&diff, m, r)?);
    }
    let cauchy = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(LimitCandidate {
        section: sections.last().expect("non-empty ladder").clone(),
        summary: LimitSummary { ladder: ladder.to_vec(), distances, order: m, subball_radius: r, cauchy },
    })
}
