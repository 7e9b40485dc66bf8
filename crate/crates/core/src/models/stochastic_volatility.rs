use rand::Rng;
use rand_distr::StandardNormal as Normal01;
use serde::{Deserialize, Serialize};

use super::gaussian::log_normal;
use crate::error::{Error, Result};
use crate::sequential::StateSpaceModel;

/// Transition noise variance.
pub const SV_NOISE_VARIANCE: f64 = 1.0 / 16.0;

/// `φ = 2·expit(φ*) − 1`.
pub fn phi_from_unconstrained(phi_star: f64) -> f64 {
    // tanh(φ*/2) equals 2σ(φ*) − 1 and keeps precision near |φ| = 1.
    (0.5 * phi_star).tanh()
}

/// Static parameters either held fixed or treated as unknowns `θ = (μ, φ*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SvParameters {
    Fixed { mu: f64, phi_star: f64 },
    Estimated,
}

/// Stochastic volatility model: `Z_{k+1} = μ + φ(Z_k − μ) + ε_k`,
/// `Y_k = ξ_k exp(Z_k / 2)`, priors `μ ~ N(0,1)` and `φ* ~ N(3,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticVolatility {
    pub parameters: SvParameters,
}

impl StochasticVolatility {
    pub fn fixed(mu: f64, phi_star: f64) -> Self {
        Self { parameters: SvParameters::Fixed { mu, phi_star } }
    }

    pub fn estimated() -> Self {
        Self { parameters: SvParameters::Estimated }
    }

    /// `(μ, φ*)` taken from `theta` or the fixed values.
    pub fn resolve(&self, theta: &[f64]) -> (f64, f64) {
        match self.parameters {
            SvParameters::Fixed { mu, phi_star } => (mu, phi_star),
            SvParameters::Estimated => (theta[0], theta[1]),
        }
    }

    fn theta_grad(&self, d_mu: f64, d_phi: f64, phi: f64) -> Vec<f64> {
        match self.parameters {
            SvParameters::Fixed { .. } => vec![],
            SvParameters::Estimated => vec![d_mu, d_phi * 0.5 * (1.0 - phi * phi)],
        }
    }

    pub fn sample_initial<R: Rng>(&self, theta: &[f64], rng: &mut R) -> f64 {
        let (mu, ps) = self.resolve(theta);
        let phi = phi_from_unconstrained(ps);
        mu + rng.sample::<f64, _>(Normal01) / (1.0 - phi * phi).sqrt()
    }

    pub fn sample_transition<R: Rng>(&self, z: f64, theta: &[f64], rng: &mut R) -> f64 {
        let (mu, ps) = self.resolve(theta);
        let phi = phi_from_unconstrained(ps);
        mu + phi * (z - mu) + SV_NOISE_VARIANCE.sqrt() * rng.sample::<f64, _>(Normal01)
    }

    pub fn sample_observation<R: Rng>(&self, z: f64, rng: &mut R) -> f64 {
        rng.sample::<f64, _>(Normal01) * (0.5 * z).exp()
    }

    /// Draws `(μ, φ*)` from the hyperprior.
    pub fn sample_parameters<R: Rng>(rng: &mut R) -> [f64; 2] {
        [rng.sample::<f64, _>(Normal01), 3.0 + rng.sample::<f64, _>(Normal01)]
    }
}

/// `log N(z_{k+1}; μ + φ(z_k − μ), 1/16)`.
pub fn sv_log_transition(z_next: f64, z: f64, mu: f64, phi: f64) -> f64 {
    log_normal(z_next, mu + phi * (z - mu), SV_NOISE_VARIANCE)
}

/// `log N(y; 0, exp(z))`.
pub fn sv_log_likelihood(y: f64, z: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI).ln() + z + y * y * (-z).exp())
}

/// `log N(z_0; μ, 1/(1 − φ²))`; requires `|φ| < 1`.
pub fn sv_log_initial(z0: f64, mu: f64, phi: f64) -> Result<f64> {
    if !(phi.abs() < 1.0) {
        return Err(Error::Domain(format!("|phi| = {} is not below 1", phi.abs())));
    }
    Ok(log_normal(z0, mu, 1.0 / (1.0 - phi * phi)))
}

/// `log N(μ; 0, 1) + log N(φ*; 3, 1)`.
pub fn sv_log_param_prior(mu: f64, phi_star: f64) -> f64 {
    log_normal(mu, 0.0, 1.0) + log_normal(phi_star, 3.0, 1.0)
}

impl StateSpaceModel for StochasticVolatility {
    fn state_dim(&self) -> usize {
        1
    }
    fn obs_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        match self.parameters {
            SvParameters::Fixed { .. } => 0,
            SvParameters::Estimated => 2,
        }
    }
    fn log_initial(&self, z0: &[f64], theta: &[f64]) -> f64 {
        let (mu, ps) = self.resolve(theta);
        sv_log_initial(z0[0], mu, phi_from_unconstrained(ps)).unwrap_or(f64::NEG_INFINITY)
    }
    fn log_transition(&self, z_next: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        let (mu, ps) = self.resolve(theta);
        sv_log_transition(z_next[0], z[0], mu, phi_from_unconstrained(ps))
    }
    fn log_likelihood(&self, y: &[f64], z: &[f64], _theta: &[f64]) -> f64 {
        sv_log_likelihood(y[0], z[0])
    }
    fn log_param_prior(&self, theta: &[f64]) -> f64 {
        match self.parameters {
            SvParameters::Fixed { .. } => 0.0,
            SvParameters::Estimated => sv_log_param_prior(theta[0], theta[1]),
        }
    }

    fn grad_initial(&self, z0: &[f64], theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (mu, ps) = self.resolve(theta);
        let phi = phi_from_unconstrained(ps);
        let s = 1.0 - phi * phi;
        let r = z0[0] - mu;
        let d_phi = -phi / s + r * r * phi;
        Some((vec![-r * s], self.theta_grad(r * s, d_phi, phi)))
    }
    fn grad_transition(&self, z_next: &[f64], z: &[f64], theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (mu, ps) = self.resolve(theta);
        let phi = phi_from_unconstrained(ps);
        let r = (z_next[0] - mu - phi * (z[0] - mu)) / SV_NOISE_VARIANCE;
        Some((vec![-r], vec![r * phi], self.theta_grad(r * (1.0 - phi), r * (z[0] - mu), phi)))
    }
    fn grad_likelihood(&self, y: &[f64], z: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let dz = -0.5 + 0.5 * y[0] * y[0] * (-z[0]).exp();
        Some((vec![dz], vec![0.0; self.param_dim()]))
    }
    fn grad_param_prior(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(match self.parameters {
            SvParameters::Fixed { .. } => vec![],
            SvParameters::Estimated => vec![-theta[0], -(theta[1] - 3.0)],
        })
    }
}
