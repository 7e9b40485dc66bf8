use super::blocks::{sub_map, StepLayout};
use super::model::StateSpaceModel;
use super::state::SmootherState;
use crate::error::{Error, Result};
use crate::transport::{LogDensity, MonotoneTriangularMap, Transport, TransportMap};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Previous-step information needed by a later step target.
struct Carry {
    /// `[M^Θ; M¹]` of the previous step, on `(x_θ, x_i)`.
    upper: Transport,
    /// Running parameter map of the previous step.
    param_map: Option<MonotoneTriangularMap>,
}

/// Unnormalised target of step `i` on `(z_θ, z_i, z_{i+1})`.
pub struct StepTarget<'a> {
    model: &'a dyn StateSpaceModel,
    layout: StepLayout,
    /// `y_0` for the first step, else `None`.
    first_obs: Option<Vec<f64>>,
    next_obs: Vec<f64>,
    carry: Option<Carry>,
}

/// Builds the target for step `i` given the maps already in `state`.
pub fn step_target<'a>(
    state: &SmootherState,
    model: &'a dyn StateSpaceModel,
    observations: &[Vec<f64>],
    i: usize,
) -> Result<StepTarget<'a>> {
    if i > state.steps.len() {
        return Err(Error::Sequencing(format!("step {i} requested but only {} steps are fitted", state.steps.len())));
    }
    if i + 1 >= observations.len() {
        return Err(Error::Sequencing(format!("step {i} needs observation {}", i + 1)));
    }
    let layout = StepLayout::new(model.state_dim(), model.param_dim());
    if i == 0 {
        return Ok(StepTarget {
            model,
            layout,
            first_obs: Some(observations[0].clone()),
            next_obs: observations[1].clone(),
            carry: None,
        });
    }
    let prev = &state.steps[i - 1];
    let upper = sub_map(&prev.map, &layout.theta().chain(layout.next()).collect::<Vec<_>>())?;
    if layout.param_dim > 0 && prev.param_map.is_none() {
        return Err(Error::Sequencing(format!("step {} has no parameter map", i - 1)));
    }
    Ok(StepTarget {
        model,
        layout,
        first_obs: None,
        next_obs: observations[i + 1].clone(),
        carry: Some(Carry { upper, param_map: prev.param_map.clone() }),
    })
}

impl StepTarget<'_> {
    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let l = &self.layout;
        (&x[l.theta()], &x[l.current()], &x[l.next()])
    }

    /// `(𝔗^Θ_{i-1}(θ), M¹_{i-1}(θ, z_i))` for later steps.
    fn carried(&self, c: &Carry, theta: &[f64], zi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut input = theta.to_vec();
        input.extend_from_slice(zi);
        let out = c.upper.evaluate(&input)?;
        let w = out[theta.len()..].to_vec();
        let a = match &c.param_map {
            Some(m) => m.evaluate(theta)?,
            None => vec![],
        };
        Ok((a, w))
    }
}

fn std_normal(x: &[f64]) -> f64 {
    -0.5 * (x.len() as f64 * LN_2PI + x.iter().map(|v| v * v).sum::<f64>())
}

fn add(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
}

impl LogDensity for StepTarget<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let m = self.model;
        let (theta, zi, zn) = self.split(x);
        match (&self.first_obs, &self.carry) {
            (Some(y0), _) => {
                m.log_param_prior(theta)
                    + m.log_initial(zi, theta)
                    + m.log_transition(zn, zi, theta)
                    + m.log_likelihood(y0, zi, theta)
                    + m.log_likelihood(&self.next_obs, zn, theta)
            }
            (None, Some(c)) => match self.carried(c, theta, zi) {
                Ok((a, w)) => {
                    std_normal(theta)
                        + std_normal(zi)
                        + m.log_transition(zn, &w, &a)
                        + m.log_likelihood(&self.next_obs, zn, &a)
                }
                Err(_) => f64::NEG_INFINITY,
            },
            (None, None) => unreachable!("step target without prior step"),
        }
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.model;
        let l = self.layout;
        let (theta, zi, zn) = self.split(x);
        let mut g = vec![0.0; x.len()];
        match (&self.first_obs, &self.carry) {
            (Some(y0), _) => {
                add(&mut g[l.theta()], &m.grad_param_prior(theta)?);
                let (dz, dt) = m.grad_initial(zi, theta)?;
                add(&mut g[l.current()], &dz);
                add(&mut g[l.theta()], &dt);
                let (dn, dz, dt) = m.grad_transition(zn, zi, theta)?;
                add(&mut g[l.next()], &dn);
                add(&mut g[l.current()], &dz);
                add(&mut g[l.theta()], &dt);
                let (dz, dt) = m.grad_likelihood(y0, zi, theta)?;
                add(&mut g[l.current()], &dz);
                add(&mut g[l.theta()], &dt);
                let (dz, dt) = m.grad_likelihood(&self.next_obs, zn, theta)?;
                add(&mut g[l.next()], &dz);
                add(&mut g[l.theta()], &dt);
            }
            (None, Some(c)) => {
                for (gi, xi) in g.iter_mut().zip(theta.iter().chain(zi)) {
                    *gi -= xi;
                }
                let (a, w) = self.carried(c, theta, zi).ok()?;
                let (dn, dw, mut da) = m.grad_transition(zn, &w, &a)?;
                add(&mut g[l.next()], &dn);
                let (dz, dt) = m.grad_likelihood(&self.next_obs, zn, &a)?;
                add(&mut g[l.next()], &dz);
                add(&mut da, &dt);
                let p = theta.len();
                if let Some(pm) = &c.param_map {
                    add(&mut g[l.theta()], &pm.vjp(theta, &da).ok()?);
                }
                let mut input = theta.to_vec();
                input.extend_from_slice(zi);
                let mut v = vec![0.0; p];
                v.extend_from_slice(&dw);
                let back = c.upper.vjp(&input, &v).ok()?;
                add(&mut g[l.theta()], &back[..p]);
                add(&mut g[l.current()], &back[p..]);
            }
            (None, None) => unreachable!("step target without prior step"),
        }
        Some(g)
    }
}
