//! Explicit prequantized Kähler manifolds and closed-form families of
//! sections of `L^k` over them.
//!
//! Every backend declares a unitary gauge for `L^k` on a coordinate patch:
//! connection coefficients (imaginary parts, as in
//! [`ConnectionForm`](crate::model_bundle::ConnectionForm)) and, where the
//! patch is not simply the universal cover, the transition data needed to move
//! between patches.

mod cp1;
mod theta;
mod torus;
mod transport;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::model_bundle::{BallDomain, ConnectionField, ConnectionForm};

pub use cp1::{cp1_backend, cp1_section, Cp1, Cp1Section, CP1_CHART_LIMIT};
pub use theta::{
    coherent_zero_family, theta_basis, theta_basis_jet, theta_section, ThetaFactor, ThetaSection,
    ThetaTerm, THETA_TRUNCATION,
};
pub use torus::{torus_backend, FlatTorus};
pub use transport::{
    parallel_transport, parallel_transport_steps, ConstantPath, Path, PolylinePath, TransportResult,
};

/// A closed Kähler manifold with a prequantum line bundle, in local
/// coordinates of a declared patch.
pub trait PrequantizedKahler: Send + Sync {
    fn name(&self) -> &'static str;

    fn complex_dim(&self) -> usize;

    fn real_dim(&self) -> usize {
        2 * self.complex_dim()
    }

    /// Metric `g(p)` as a symmetric `2n x 2n` matrix.
    fn metric(&self, p: &[f64]) -> DMatrix<f64>;

    /// Symplectic form `ω(p)` as an antisymmetric matrix.
    fn symplectic(&self, p: &[f64]) -> DMatrix<f64>;

    /// Almost-complex structure `J(p)`, acting on column vectors.
    fn complex_structure(&self, p: &[f64]) -> DMatrix<f64>;

    /// `(γ(t), γ'(t))` for the `g`-geodesic with `γ(0) = p`, `γ'(0) = v`.
    fn geodesic(&self, p: &[f64], v: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)>;

    /// `∂ exp_p(v) / ∂v` when available in closed form.
    fn exp_jacobian(&self, _p: &[f64], _v: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Real `2n x 2n` matrix sending `C^n` (interleaved) onto `T_p X`:
    /// `g`-orthonormal and commuting with `J`.
    fn unitary_basis(&self, p: &[f64]) -> DMatrix<f64>;

    /// Connection coefficients of the declared gauge of `L^k`.
    fn connection_coefficients(&self, k: u32, p: &[f64]) -> Vec<f64>;

    fn connection_jacobian(&self, _k: u32, _p: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Fails when `p` is outside the coordinate patch used by experiments.
    fn check_point(&self, p: &[f64]) -> Result<()>;

    /// `∫_X ω` computed by quadrature over the declared patch.
    fn total_area(&self) -> f64;
}

/// For each `k`, a section of `L^k` evaluated in the backend's declared gauge.
pub trait SectionFamily: Send + Sync {
    fn power(&self) -> u32;

    fn complex_dim(&self) -> usize;

    fn value(&self, p: &[f64]) -> Complex64;

    /// Real gradient in patch coordinates, when available in closed form.
    fn gradient(&self, _p: &[f64]) -> Option<Vec<Complex64>> {
        None
    }
}

/// The declared `L^k` gauge of a backend as a connection form on patch
/// coordinates.
pub struct BackendConnection {
    backend: Arc<dyn PrequantizedKahler>,
    k: u32,
}

impl BackendConnection {
    pub fn new(backend: Arc<dyn PrequantizedKahler>, k: u32) -> Self {
        Self { backend, k }
    }

    /// As a [`ConnectionField`] whose grid spacing sets the finite-difference
    /// step; patch coordinates are used directly.
    pub fn field(self, domain: BallDomain) -> Result<ConnectionField> {
        ConnectionField::new(domain, Arc::new(self))
    }
}

impl ConnectionForm for BackendConnection {
    fn real_dim(&self) -> usize {
        self.backend.real_dim()
    }

    fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        self.backend.connection_coefficients(self.k, z)
    }

    fn coefficient_jacobian(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.backend.connection_jacobian(self.k, z)
    }
}

/// `max |g - ω(·, J·)|` at `p`: zero for compatible structures.
pub fn compatibility_defect(backend: &dyn PrequantizedKahler, p: &[f64]) -> f64 {
    let g = backend.metric(p);
    let w = backend.symplectic(p);
    let j = backend.complex_structure(p);
    crate::linalg::max_abs_entry(&(g - w * j))
}
