use crate::error::{Error, Result};
use crate::transport::LogDensity;

/// A discrete-time state-space model with optional static parameters `θ`.
///
/// Gradient methods return `None` when unavailable; callers then fall back
/// to finite differences.
pub trait StateSpaceModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn param_dim(&self) -> usize {
        0
    }

    fn log_initial(&self, z0: &[f64], theta: &[f64]) -> f64;
    fn log_transition(&self, z_next: &[f64], z: &[f64], theta: &[f64]) -> f64;
    fn log_likelihood(&self, y: &[f64], z: &[f64], theta: &[f64]) -> f64;
    fn log_param_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    /// `(d/dz0, d/dθ)`.
    fn grad_initial(&self, _z0: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
    /// `(d/dz_next, d/dz, d/dθ)`.
    fn grad_transition(&self, _z_next: &[f64], _z: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        None
    }
    /// `(d/dz, d/dθ)`.
    fn grad_likelihood(&self, _y: &[f64], _z: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
    fn grad_param_prior(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; theta.len()])
    }
}

/// Checks that every observation has the model's observation dimension and
/// only finite entries. Missing values are rejected.
pub fn validate_observations(model: &dyn StateSpaceModel, observations: &[Vec<f64>]) -> Result<()> {
    for (t, y) in observations.iter().enumerate() {
        if y.len() != model.obs_dim() {
            return Err(Error::Dimension { expected: model.obs_dim(), got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("observation at time {t} is missing or not finite")));
        }
    }
    Ok(())
}

/// Joint log-density of `(θ, z_0, …, z_N)` given `y_0, …, y_N`, with
/// coordinates laid out as `[θ, z_0, z_1, …]`.
pub struct JointPosterior<'a> {
    pub model: &'a dyn StateSpaceModel,
    pub observations: &'a [Vec<f64>],
}

impl<'a> JointPosterior<'a> {
    pub fn new(model: &'a dyn StateSpaceModel, observations: &'a [Vec<f64>]) -> Self {
        Self { model, observations }
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], impl Fn(usize) -> &'x [f64]) {
        let p = self.model.param_dim();
        let n = self.model.state_dim();
        let (theta, z) = x.split_at(p);
        (theta, move |k: usize| &z[k * n..(k + 1) * n])
    }
}

impl LogDensity for JointPosterior<'_> {
    fn dim(&self) -> usize {
        self.model.param_dim() + self.observations.len() * self.model.state_dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let m = self.model;
        let (theta, z) = self.split(x);
        let mut s = m.log_param_prior(theta) + m.log_initial(z(0), theta);
        for (k, y) in self.observations.iter().enumerate() {
            if k > 0 {
                s += m.log_transition(z(k), z(k - 1), theta);
            }
            s += m.log_likelihood(y, z(k), theta);
        }
        s
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.model;
        let p = m.param_dim();
        let n = m.state_dim();
        let (theta, z) = self.split(x);
        let mut g = vec![0.0; x.len()];
        let add =
            |g: &mut [f64], off: usize, v: &[f64]| g[off..off + v.len()].iter_mut().zip(v).for_each(|(a, b)| *a += b);
        add(&mut g, 0, &m.grad_param_prior(theta)?);
        let (dz, dt) = m.grad_initial(z(0), theta)?;
        add(&mut g, p, &dz);
        add(&mut g, 0, &dt);
        for (k, y) in self.observations.iter().enumerate() {
            if k > 0 {
                let (dn, dz, dt) = m.grad_transition(z(k), z(k - 1), theta)?;
                add(&mut g, p + k * n, &dn);
                add(&mut g, p + (k - 1) * n, &dz);
                add(&mut g, 0, &dt);
            }
            let (dz, dt) = m.grad_likelihood(y, z(k), theta)?;
            add(&mut g, p + k * n, &dz);
            add(&mut g, 0, &dt);
        }
        Some(g)
    }
}
