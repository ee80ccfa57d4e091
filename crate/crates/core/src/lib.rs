//! Quantum and classical dynamics of the Dicke model.

// NaN-rejecting comparisons are written as `!(a < b)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod cache;
pub mod classical;
pub mod coherent;
pub mod config;
pub mod dynamics;
pub mod error;
mod linalg;
pub mod maps;
pub mod model;
pub mod ode;
pub mod plots;
pub mod scan;
pub mod spectrum;

pub use error::{Error, Result};
