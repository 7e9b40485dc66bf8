//! Variational inference with low-dimensional monotone transport maps.
//!
//! The crate is organised around five layers:
//!
//! * [`graph`]: Markov structure, sparsity bounds, orderings and decompositions.
//! * [`transport`]: monotone triangular maps and the densities they induce.
//! * [`variational`]: reference rules, the KL objective and map fitting.
//! * [`sequential`]: recursive smoothing, filtering and parameter estimation
//!   for state-space models.
//! * [`models`]: built-in targets, state-space models and Kalman references.

pub mod error;
pub mod graph;
pub mod models;
pub mod parallel;
pub mod quadrature;
pub mod sequential;
pub mod transport;
pub mod variational;

pub use error::{Error, Result};
