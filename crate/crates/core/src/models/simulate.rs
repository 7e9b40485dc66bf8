use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear_gaussian::LinearGaussianSsm;
use super::stochastic_volatility::StochasticVolatility;
use crate::error::{Error, Result};
use crate::sequential::StateSpaceModel;

/// Simulated hidden states and observations, one row per time index.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
}

/// Models that support ancestral sampling.
pub trait Simulate: StateSpaceModel {
    fn simulate_with(&self, len: usize, theta: &[f64], rng: &mut ChaCha8Rng) -> Trajectory;
}

impl Simulate for LinearGaussianSsm {
    fn simulate_with(&self, len: usize, _theta: &[f64], rng: &mut ChaCha8Rng) -> Trajectory {
        let mut states = Vec::with_capacity(len);
        let mut observations = Vec::with_capacity(len);
        let mut z: DVector<f64> = self.sample_initial(rng);
        for k in 0..len {
            if k > 0 {
                z = self.sample_transition(&z, rng);
            }
            observations.push(self.sample_observation(&z, rng).as_slice().to_vec());
            states.push(z.as_slice().to_vec());
        }
        Trajectory { states, observations }
    }
}

impl Simulate for StochasticVolatility {
    fn simulate_with(&self, len: usize, theta: &[f64], rng: &mut ChaCha8Rng) -> Trajectory {
        let mut states = Vec::with_capacity(len);
        let mut observations = Vec::with_capacity(len);
        let mut z = self.sample_initial(theta, rng);
        for k in 0..len {
            if k > 0 {
                z = self.sample_transition(z, theta, rng);
            }
            observations.push(vec![self.sample_observation(z, rng)]);
            states.push(vec![z]);
        }
        Trajectory { states, observations }
    }
}

/// Ancestral sample of `len` time indices. `theta` is required exactly when
/// the model has static parameters. Deterministic in `seed`.
pub fn simulate<M: Simulate + ?Sized>(model: &M, len: usize, theta: Option<&[f64]>, seed: u64) -> Result<Trajectory> {
    let theta = theta.unwrap_or(&[]);
    if theta.len() != model.param_dim() {
        return Err(Error::Dimension { expected: model.param_dim(), got: theta.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(model.simulate_with(len, theta, &mut rng))
}
