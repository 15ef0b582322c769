//! Numerical toolkit for dual curvature measures of origin-symmetric convex
//! bodies.
//!
//! The crate estimates the q-th dual curvature measures
//! `C̃_q(K, η) = (1/n) ∫_{α*_K(η)} ρ_K(u)^q dH^{n-1}(u)` by seeded Monte Carlo
//! on the sphere, computes exact cone-volume measures of H-polytopes, checks
//! the subspace concentration bound `C̃_q(K, S∩L) / C̃_q(K, S) ≤ min{dim L / q, 1}`,
//! evaluates the cylinder family `(rB_k) × B_{n-k}` that makes the bound
//! tight, and exercises the Brunn–Minkowski type inequality for even
//! unimodal integrands that the bound rests on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod cli;
pub mod concentration;
pub mod cylinder;
mod error;
pub mod format;
pub mod linalg;
pub mod measures;
pub mod polytope;
pub mod quadrature;
pub mod special;
pub mod unimodal;

pub use bodies::{Direction, Ellipsoid, PolytopeH, ProductCylinder, SymmetricBody};
pub use concentration::{make_subspace, RatioReport, Subspace, Verdict};
pub use error::{Error, Result};
pub use polytope::GeneralPolytopeV;
pub use quadrature::{MeasureEstimate, QuadratureSpec};
