//! Built-in targets and state-space models: Gaussians, a banana density,
//! linear-Gaussian and stochastic-volatility models, a seeded simulator and a
//! Kalman/RTS reference implementation.

mod gaussian;
mod kalman;
mod linear_gaussian;
mod simulate;
mod stochastic_volatility;

pub use gaussian::{banana_logdensity, Banana, Gaussian, StandardNormal};
pub use kalman::{kalman_rts, KalmanOutput};
pub use linear_gaussian::{LinearGaussianRepr, LinearGaussianSsm};
pub use simulate::{simulate, Simulate, Trajectory};
pub use stochastic_volatility::{
    phi_from_unconstrained, sv_log_initial, sv_log_likelihood, sv_log_param_prior, sv_log_transition,
    StochasticVolatility, SvParameters, SV_NOISE_VARIANCE,
};
