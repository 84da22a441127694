//! Sparse-grid B-spline spaces on the unit cube and on mapped domains.
//!
//! Univariate dyadic spline spaces ([`bspline`]) are combined into
//! anisotropic tensor products ([`project`]), sparse level sets ([`index`])
//! and sparse-grid functions in combination and hierarchical form
//! ([`sparse`]). [`geometry`] pushes these spaces onto domains described by a
//! coarse spline map, [`inverse`] computes inverse-inequality quotients and
//! [`study`] drives configurable convergence and identity studies.

pub mod bspline;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod index;
pub mod inverse;
pub mod linalg;
pub mod project;
pub mod quadrature;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
