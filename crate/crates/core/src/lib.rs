//! Numerical renormalization of sections of tensor powers of a prequantum
//! line bundle.
//!
//! Sections of `L^k` over an explicit Kähler manifold are pulled back through
//! rescaled geodesic charts and radially flat unitary gauges to the unit ball,
//! where they are compared against the model Bargmann-Fock bundle. The crate is
//! split along the pipeline:
//!
//! * [`model_bundle`]: the model connection on the ball, covariant and
//!   Cauchy-Riemann derivatives, Gaussian-weighted polynomial sections.
//! * [`backends`]: flat tori with theta sections and the Fubini-Study line
//!   with polynomial sections.
//! * [`renormalize`]: charts, radial gauges, pullbacks and limit extraction
//!   over ladders of powers.
//! * [`diagnostics`]: seminorms, transversality margins, zero loci,
//!   symplectic margins and curvature of zero sets.
//!
//! Real coordinates on `C^n` are interleaved as `(x_1, y_1, x_2, y_2, ...)`
//! and the complex structure is `J ∂x = ∂y`.

// NaN must fail range checks, so negated comparisons are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backends;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod model_bundle;
pub mod par;
pub mod renormalize;

pub use error::{Error, Result};
pub use num_complex::Complex64;
