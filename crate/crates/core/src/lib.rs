//! Numerical laboratory for second-order estimates of regularized
//! p-harmonic minimizers.
//!
//! The crate bundles five cooperating toolboxes:
//!
//! * [`matrix`] — Cordes-condition checks and the explicit matrix
//!   inequalities they imply, with certificate constants.
//! * [`profile`] — the scalar profiles `a`, `b` of the regularized
//!   p-energy, their induced structure matrices and admissibility windows.
//! * [`field`] — finite-difference calculus on grid-sampled fields and
//!   pointwise verification of the divergence-form identities.
//! * [`solver`] — minimization of the regularized p-energy with Dirichlet
//!   data, plus the norms entering the global estimates.
//! * [`boundary`] — sampled boundary curves, tangential calculus, relative
//!   capacity, curvature concentration and rearrangement-invariant norms.
//!
//! All numeric kernels are generic over the scalar type through
//! [`scalar::Real`]; concrete `f64` aliases live at the crate root.

pub mod analytic;
pub mod boundary;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod matrix;
pub mod profile;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense symmetric matrix over `f64`.
pub type SymMatrix64 = matrix::SymMatrix<f64>;
/// Dense square matrix over `f64`.
pub type SqMatrix64 = matrix::SqMatrix<f64>;
/// Cordes certificate over `f64`.
pub type CordesCertificate64 = matrix::CordesCertificate<f64>;
/// Operator profile over `f64`.
pub type OperatorProfile64 = profile::OperatorProfile<f64>;
/// Uniform grid domain over `f64`.
pub type GridDomain64 = grid::GridDomain<f64>;
/// Grid-sampled scalar field over `f64`.
pub type ScalarField64 = field::ScalarField<f64>;
/// Grid-sampled vector field over `f64`.
pub type VectorField64 = field::VectorField<f64>;
/// Sampled boundary curve over `f64`.
pub type BoundaryCurve64 = boundary::BoundaryCurve<f64>;
