//! Boundary behaviour of binary Gaussian mixtures: generator pairs, slowly
//! varying stabilizing sequences, skew-Cauchy and G limit laws, boundary
//! maximum likelihood, composite mixtures and the Monte Carlo experiments
//! that tie them together.

pub mod asymptotics;
pub mod cli;
pub mod composite;
pub mod error;
pub mod generators;
pub mod inference;
pub mod quad;
pub mod simlab;
pub mod stable_laws;

pub use error::{Error, Result};
