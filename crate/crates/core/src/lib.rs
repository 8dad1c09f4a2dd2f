//! Minimum complexity pursuit for compressed sensing over computable signals.

pub mod codebook;
pub mod complexity;
pub mod concentration;
pub mod error;
pub mod harness;
pub mod quantize;
pub mod rng;
pub mod sensing;
pub mod solver;

pub use error::{Error, Result};
