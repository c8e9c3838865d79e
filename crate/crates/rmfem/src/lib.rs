//! Random-mesh finite elements for a diffusion equation, with a Bayesian
//! inverse problem on top: deterministic and mesh-marginal likelihoods,
//! adaptive random walk Metropolis, and the diagnostics that separate
//! interpolation error from solver bias.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fem;
pub mod field;
pub mod inverse;
mod linalg;
pub mod mesh;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
