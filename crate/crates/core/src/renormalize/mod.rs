//! Renormalization of sections of `L^k` to the unit ball.
//!
//! A [`Chart`] is the exponential map of `g_k = k g` at a center `p`, composed
//! with a unitary frame of `T_p X`: `φ_k(w) = exp_p(U w / √k)` with `U`
//! orthonormal for `g`. A [`RadialGauge`] trivializes the pulled-back `L^k` by
//! parallel transport along the rays `t ↦ φ_k(t w)`. In that gauge a section
//! with value `f` in the backend's gauge becomes `σ(w) = f(φ_k(w)) / ψ(w)`
//! where `ψ(w)` is the transport of the unit fiber coordinate to `φ_k(w)`, and
//! the connection becomes `φ_k^* A_k + dψ / ψ`, which is radially flat.
//!
//! Torus sections are evaluated on the universal cover, so lattice cocycles
//! never enter; CP¹ charts stay inside the affine patch.

mod chart;
mod gauge;
mod limit;
mod pullback;

pub use chart::{build_chart, identity_frame, Chart, ChartInvariants};
pub use gauge::{radial_gauge, RadialGauge};
pub use limit::{limit_extract, LimitCandidate, LimitSummary};
pub use pullback::{
    pullback_connection, pullback_structure, renormalize_section, ConnectionDeviation,
    GaugedPullback, PulledStructure, StructureDeviation,
};
