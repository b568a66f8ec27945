//! Galerkin simulator for a three-phase tumor growth model with a
//! regularized simplex constraint.

pub mod basis;
pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod potential;
pub mod stepper;

pub use error::{Error, Result};
