//! Recursive transport smoothing, filtering and parameter estimation for
//! state-space models.
//!
//! Step `i` fits a map on `(x_θ, x_i, x_{i+1})` whose components are ordered
//! parameters first, then `x_{i+1}`, then `x_i`. Its `x_{i+1}` block feeds the
//! target of step `i + 1`, so each fit has fixed dimension regardless of the
//! time horizon. Smoothing samples come from a backward pass over all step
//! maps and never touch the model densities.

mod assimilate;
mod blocks;
mod linear_gaussian;
mod model;
mod sample;
mod state;
mod target;

pub use assimilate::{
    assimilate, assimilate_linear_gaussian, extend, extend_linear_gaussian, fixed_point_smoother, AssimilationOptions,
};
pub use blocks::{sub_map, StepLayout};
pub use linear_gaussian::{linear_gaussian_first_step, linear_gaussian_step, sqrt_kalman_update, LinearGaussianStep};
pub use model::{validate_observations, JointPosterior, StateSpaceModel};
pub use sample::{
    lag1_map, log_importance_weights, normalize_log_weights, reference_draws, sample_filtering, sample_parameters,
    sample_smoothing, sample_smoothing_with_log_density, smoothing_dim,
};
pub use state::{step_file, Manifest, SmootherState, StateKind, StepFailure, StepRecord, FORMAT_VERSION};
pub use target::{step_target, StepTarget};
