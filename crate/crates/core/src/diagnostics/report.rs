use serde::{Deserialize, Serialize};

use crate::model_bundle::BallDomain;

/// Grid metadata attached to every reported number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub n: usize,
    pub points_per_axis: usize,
    pub radius: f64,
    pub spacing: f64,
}

impl From<&BallDomain> for Resolution {
    fn from(d: &BallDomain) -> Self {
        Self { n: d.n(), points_per_axis: d.points_per_axis(), radius: d.radius(), spacing: d.spacing() }
    }
}

/// A measured quantity. `value` is `None` for vacuous or trivial verdicts
/// (for example an empty near-zero set), described in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: Option<f64>,
    pub resolution: Resolution,
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: Option<f64>, resolution: Resolution) -> Self {
        Self { name: name.into(), value: value.filter(|v| v.is_finite()), resolution, tolerance: None, note: None }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
    /// Inclusive interval `[threshold, upper]`.
    Within,
}

/// A pass/fail verdict on one measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub comparison: Comparison,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: Option<f64>, comparison: Comparison, threshold: f64) -> Self {
        let passed = match value {
            Some(v) if v.is_finite() => match comparison {
                Comparison::Le => v <= threshold,
                Comparison::Lt => v < threshold,
                Comparison::Ge => v >= threshold,
                Comparison::Gt => v > threshold,
                Comparison::Within => false,
            },
            _ => false,
        };
        Self { name: name.into(), value, comparison, threshold, upper: None, passed, resolution: None }
    }

    pub fn within(name: impl Into<String>, value: Option<f64>, lo: f64, hi: f64) -> Self {
        let passed = value.is_some_and(|v| v >= lo && v <= hi);
        Self {
            name: name.into(),
            value,
            comparison: Comparison::Within,
            threshold: lo,
            upper: Some(hi),
            passed,
            resolution: None,
        }
    }

    /// A boolean verdict recorded as 1/0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, Some(if ok { 1.0 } else { 0.0 }), Comparison::Ge, 1.0)
    }

    pub fn at(mut self, resolution: Resolution) -> Self {
        self.resolution = Some(resolution);
        self
    }
}

/// Measurements for one power `k` of a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungRecord {
    pub k: u32,
    pub center: Vec<f64>,
    pub metrics: Vec<Metric>,
}

impl RungRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).and_then(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DiagnosticsReport {
    pub experiment: String,
    pub rungs: Vec<RungRecord>,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Every reported number is finite (vacuous values are recorded as absent).
    pub fn all_finite(&self) -> bool {
        let metric_ok = |m: &Metric| m.value.is_none_or(f64::is_finite) && m.resolution.spacing.is_finite();
        self.metrics.iter().all(metric_ok)
            && self.rungs.iter().all(|r| r.metrics.iter().all(metric_ok))
            && self.checks.iter().all(|c| c.value.is_none_or(f64::is_finite) && c.threshold.is_finite())
    }
}
