//! g-Forchheimer flow in porous media and its link to constant mean
//! curvature graphs.
//!
//! - [`gppc`]: momentum-law nonlinearities `g` and the mobility `K`.
//! - [`geometry`]: fundamental forms and mean curvature of (generalized) graphs.
//! - [`grid`]: structured polar/Cartesian grids, fields, operators, quadrature.
//! - [`solver`]: Picard solvers for pseudo-steady-state profiles and CMC graphs.
//! - [`transform`]: the lift of a profile to a CMC graph and its inverse.
//! - [`engineering`]: velocity, productivity index, radial reference solution
//!   and the CMC-based productivity-index pipeline.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engineering;
pub mod error;
pub mod geometry;
pub mod gppc;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod solver;
pub mod transform;

pub use error::{Error, FailureKind, Result};
pub use gppc::GppcPolynomial;
pub use grid::{BoundaryTag, Domain, ScalarField, VectorField};
