//! The model Hermitian line bundle over the ball in `C^n`: the radially flat
//! unitary connection of curvature `-2πi Σ dx_α ∧ dy_α`, its covariant and
//! Cauchy-Riemann operators, and Gaussian-weighted polynomial sections.
//!
//! A section `s` is holomorphic for the model connection exactly when
//! `s · exp(π/2 Σ|z_α|²)` is holomorphic in the ordinary sense; both criteria
//! are implemented ([`dbar_operator`] and [`ordinary_dbar`] of [`unweight`]).

mod connection;
mod domain;
mod holomorphy;
mod polynomial;
mod section;
pub mod stencil;

pub use connection::{
    curvature_of, model_connection, radial_flatness_defect, ConnectionField, ConnectionForm,
    CurvatureTable, DerivativeMode, FnConnection, ModelConnection, ZeroConnection,
};
pub use domain::BallDomain;
pub use holomorphy::{
    bargmann_section, covariant_derivative, covariant_differential, dbar_defect, dbar_operator,
    holomorphy_criteria_gap, ordinary_dbar, section_jet, unweight, weight, BargmannEvaluator,
};
pub use polynomial::Polynomial;
pub use section::{GridSection, Representation, SectionEvaluator, SectionFlag};
