use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("finite-difference stencil leaves the domain at {point:?}")]
    StencilExitsDomain { point: Vec<f64> },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("point {point:?} is not a grid node and the section has no evaluator")]
    NotOnGrid { point: Vec<f64> },

    #[error("analytic derivatives are not available for this {0}")]
    NoAnalyticDerivative(&'static str),

    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: i64, bound: i64 },

    #[error("polynomial degree {degree} exceeds power {power}")]
    DegreeTooHigh { degree: usize, power: u32 },

    #[error("frame is not unitary (deviation {deviation:e})")]
    NonUnitaryFrame { deviation: f64 },

    #[error("section power {family} does not match chart power {chart}")]
    PowerMismatch { family: u32, chart: u32 },

    #[error("point {point:?} is outside atlas coverage")]
    AtlasCoverage { point: Vec<f64> },

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("grids differ across ladder rungs")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
