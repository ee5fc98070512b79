//! Exact discrete optimal transport under quadratic cost, cyclically
//! monotone sets and their convex potentials, center-outward ranks, and
//! diagnostics for the consistency of empirical transport maps.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod geometry;
pub mod io;
pub mod monotone;
pub mod ranks;
pub mod transport;

pub use error::{Error, Result};
