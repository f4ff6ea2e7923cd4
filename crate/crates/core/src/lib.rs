//! Stochastic Burgers dynamics, pullback parameterizing manifolds and the
//! low-dimensional reduced systems built from them.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod manifolds;
pub mod memory;
pub mod model;
pub mod noise;
pub mod reduced;
pub mod solver;

pub use error::{Error, Result};
