//! Numerical laboratory for the supersymmetric hyperbolic sigma model in its
//! horospherical `t`-field form.
//!
//! The measure on field configurations `t: Λ → ℝ` is
//!
//! ```text
//! dμ(t) = Π_j dt_j/√(2π) · exp(−F(∇t) − M(t)) · √det D(t)
//! ```
//!
//! with kinetic part `F = β Σ_(jj') (cosh(t_j − t_j') − 1)`, mass
//! `M = Σ_j ε_j (cosh t_j − 1)` and the positive definite matrix `D` built in
//! [`model::build_d`]. The crate provides:
//!
//! * [`lattice`]: hypercubic lattices with periodic or Neumann boundaries.
//! * [`model`]: the actions, the matrices `D` and `A = e^t D e^t`, pinnings.
//! * [`linalg`]: dense Cholesky, log-determinants, selected inverse entries.
//! * [`exact`]: tensor-product quadrature for volumes of at most four sites.
//! * [`mcmc`]: Metropolis sampling with batch-means error bars.
//! * [`combinatorics`]: self-avoiding walks, the path expansion of
//!   `M⁻¹_xy det M`, spanning trees and the matrix-tree identity.
//! * [`bounds`]: `I_β`, the critical `β_c`, decay envelopes and rate fits.
//! * [`verify`]: the identity suite that machine-checks every exact relation.
//! * [`decay`]: end-to-end decay measurements compared against the envelopes.

pub mod bounds;
pub mod combinatorics;
pub mod decay;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{Boundary, Lattice};
pub use linalg::{Matrix, SpdFactor};
pub use model::{FieldConfig, ModelParams, Observable, PinningScheme};
