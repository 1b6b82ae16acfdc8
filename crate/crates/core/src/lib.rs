//! Lowest-order Raviart–Thomas interpolation on β-graded anisotropic
//! surface meshes, with the fractional and anisotropic Sobolev norms needed
//! to test its stability, and the mixed projection `Q_h`.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod quadrature;

pub use error::{Error, Result};
pub mod integrate;
pub mod norms;
pub mod qh;
pub mod rt;
pub mod study;
