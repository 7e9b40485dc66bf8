use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::blocks::sub_map;
use super::model::{JointPosterior, StateSpaceModel};
use super::state::SmootherState;
use crate::error::{Error, Result};
use crate::parallel::{map_collect, Execution};
use crate::transport::{EmbeddedMap, LogDensity, MapComposition, TransportMap};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `m` standard-normal draws of dimension `dim`, generated sequentially so
/// the result does not depend on the thread count.
pub fn reference_draws(m: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

/// Dimension of a smoothing sample: parameters plus `k + 2` states.
pub fn smoothing_dim(state: &SmootherState) -> usize {
    state.param_dim + (state.steps.len() + 1) * state.state_dim
}

/// Applies the step maps from last to first; returns the summed log-determinant.
fn push_smoothing(state: &SmootherState, x: &mut [f64]) -> Result<f64> {
    let (p, n) = (state.param_dim, state.state_dim);
    let mut local = vec![0.0; p + 2 * n];
    let mut log_det = 0.0;
    for j in (0..state.steps.len()).rev() {
        local[..p].copy_from_slice(&x[..p]);
        local[p..].copy_from_slice(&x[p + j * n..p + (j + 2) * n]);
        let (out, ld) = state.steps[j].map.evaluate_with_log_det(&local)?;
        x[..p].copy_from_slice(&out[..p]);
        x[p + j * n..p + (j + 2) * n].copy_from_slice(&out[p..]);
        log_det += ld;
    }
    Ok(log_det)
}

/// Samples the joint smoothing distribution of `(θ, z_0, …, z_{k+1})` by
/// pushing reference draws through the step maps. Model densities are never
/// evaluated.
pub fn sample_smoothing(state: &SmootherState, m: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    Ok(sample_smoothing_with_log_density(state, m, seed, exec)?.into_iter().map(|(x, _)| x).collect())
}

/// As [`sample_smoothing`], also returning the log-density of each sample
/// under the transport approximation.
pub fn sample_smoothing_with_log_density(
    state: &SmootherState,
    m: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<(Vec<f64>, f64)>> {
    state.require_steps()?;
    let dim = smoothing_dim(state);
    let draws = reference_draws(m, dim, seed);
    map_collect(exec, m, |i| {
        let mut x = draws[i].clone();
        let log_eta = -0.5 * (dim as f64 * LN_2PI + x.iter().map(|v| v * v).sum::<f64>());
        let ld = push_smoothing(state, &mut x)?;
        Ok((x, log_eta - ld))
    })
    .into_iter()
    .collect()
}

/// Samples the filtering distribution of `(θ, z_{k+1})` at the last step.
pub fn sample_filtering(state: &SmootherState, m: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let k = state.require_steps()?;
    let layout = state.layout();
    let (p, n) = (state.param_dim, state.state_dim);
    let step = &state.steps[k];
    let draws = reference_draws(m, p + n, seed);
    map_collect(exec, m, |i| {
        let x = &draws[i];
        let mut local = vec![0.0; layout.dim()];
        local[..p].copy_from_slice(&x[..p]);
        local[layout.next()].copy_from_slice(&x[p..]);
        let out = step.map.evaluate(&local)?;
        let mut z = match &step.param_map {
            Some(pm) => pm.evaluate(&x[..p])?,
            None => vec![],
        };
        z.extend_from_slice(&out[layout.next()]);
        Ok(z)
    })
    .into_iter()
    .collect()
}

/// Samples the static block through the running parameter map of the last
/// step: `θ` for joint estimation, `z_0` for the fixed-point smoother.
pub fn sample_parameters(state: &SmootherState, m: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let k = state.require_steps()?;
    let pm = state.steps[k].param_map.as_ref().ok_or_else(|| Error::Sequencing("state has no parameter map".into()))?;
    let draws = reference_draws(m, state.param_dim, seed);
    map_collect(exec, m, |i| pm.evaluate(&draws[i])).into_iter().collect()
}

/// Map on `(x_k, x_{k+1})` pushing the reference to the lag-1 smoothing
/// distribution of `(z_k, z_{k+1})` given `y_0, …, y_{k+1}`.
pub fn lag1_map(state: &SmootherState, k: usize) -> Result<MapComposition> {
    if state.param_dim != 0 {
        return Err(Error::Domain("lag-1 maps are defined for parameter-free states".into()));
    }
    if k >= state.steps.len() {
        return Err(Error::Sequencing(format!("step {k} is not fitted")));
    }
    let n = state.state_dim;
    let last = EmbeddedMap::full(state.steps[k].map.clone());
    if k == 0 {
        return MapComposition::new(2 * n, vec![last]);
    }
    let prev = sub_map(&state.steps[k - 1].map, &state.layout().next().collect::<Vec<_>>())?;
    let first = EmbeddedMap::new(prev, (0..n).collect(), 2 * n)?;
    MapComposition::new(2 * n, vec![first, last])
}

/// `log π(x) − log q(x)` for smoothing samples with proposal log-densities,
/// where `π` is the unnormalised joint posterior of the assimilated data.
pub fn log_importance_weights(
    state: &SmootherState,
    model: &dyn StateSpaceModel,
    samples: &[(Vec<f64>, f64)],
    exec: Execution,
) -> Result<Vec<f64>> {
    let joint = JointPosterior::new(model, &state.observations);
    let dim = smoothing_dim(state);
    if joint.dim() != dim {
        return Err(Error::Dimension { expected: dim, got: joint.dim() });
    }
    Ok(map_collect(exec, samples.len(), |i| joint.log_density(&samples[i].0) - samples[i].1))
}

/// Self-normalised weights from log-weights.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
    let total = crate::parallel::pairwise_sum(&w);
    w.into_iter().map(|v| v / total).collect()
}
