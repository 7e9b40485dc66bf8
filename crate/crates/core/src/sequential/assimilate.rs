use serde::{Deserialize, Serialize};

use super::blocks::{sub_map, StepLayout};
use super::linear_gaussian::{linear_gaussian_first_step, linear_gaussian_step};
use super::model::{validate_observations, StateSpaceModel};
use super::state::{SmootherState, StateKind, StepFailure, StepRecord};
use super::target::step_target;
use crate::error::{Error, Result};
use crate::models::LinearGaussianSsm;
use crate::transport::{MapTemplate, MonotoneTriangularMap, Transport, TransportMap};
use crate::variational::{compute_map, regress_map, FitOptions, ReferenceRule, RuleKind};

/// Settings shared by all steps of an assimilation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssimilationOptions {
    pub template: MapTemplate,
    /// Rule for each step fit; defaults by dimension when absent.
    #[serde(default)]
    pub rule: Option<RuleKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fit: FitOptions,
    /// Monte Carlo points used to regress the running parameter map.
    #[serde(default = "default_regression_points")]
    pub regression_points: usize,
    /// Start step `i ≥ 2` from the coefficients of step `i − 1`.
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_regression_points() -> usize {
    2000
}

fn default_true() -> bool {
    true
}

impl AssimilationOptions {
    pub fn new(template: MapTemplate) -> Self {
        Self {
            template,
            rule: None,
            seed: 0,
            fit: FitOptions::default(),
            regression_points: default_regression_points(),
            warm_start: true,
        }
    }

    fn rule_for(&self, dim: usize, step: usize) -> Result<ReferenceRule> {
        let kind = match self.rule.unwrap_or_else(|| RuleKind::default_for(dim, self.seed)) {
            RuleKind::MonteCarlo { points, seed } => {
                RuleKind::MonteCarlo { points, seed: seed.wrapping_add(step as u64) }
            }
            k => k,
        };
        ReferenceRule::new(kind, dim)
    }
}

/// Treats `z_0` as a static parameter of a parameter-free model. Time index
/// `j` of the adapter is time `j + 1` of the wrapped model.
struct FixedPointAdapter<'a> {
    inner: &'a dyn StateSpaceModel,
    y0: Vec<f64>,
}

impl StateSpaceModel for FixedPointAdapter<'_> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }
    fn param_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn log_initial(&self, z1: &[f64], z0: &[f64]) -> f64 {
        self.inner.log_transition(z1, z0, &[])
    }
    fn log_transition(&self, z_next: &[f64], z: &[f64], _z0: &[f64]) -> f64 {
        self.inner.log_transition(z_next, z, &[])
    }
    fn log_likelihood(&self, y: &[f64], z: &[f64], _z0: &[f64]) -> f64 {
        self.inner.log_likelihood(y, z, &[])
    }
    fn log_param_prior(&self, z0: &[f64]) -> f64 {
        self.inner.log_initial(z0, &[]) + self.inner.log_likelihood(&self.y0, z0, &[])
    }
    fn grad_initial(&self, z1: &[f64], z0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (dn, dz, _) = self.inner.grad_transition(z1, z0, &[])?;
        Some((dn, dz))
    }
    fn grad_transition(&self, z_next: &[f64], z: &[f64], z0: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (dn, dz, _) = self.inner.grad_transition(z_next, z, &[])?;
        Some((dn, dz, vec![0.0; z0.len()]))
    }
    fn grad_likelihood(&self, y: &[f64], z: &[f64], z0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (dz, _) = self.inner.grad_likelihood(y, z, &[])?;
        Some((dz, vec![0.0; z0.len()]))
    }
    fn grad_param_prior(&self, z0: &[f64]) -> Option<Vec<f64>> {
        let (mut g, _) = self.inner.grad_initial(z0, &[])?;
        let (gl, _) = self.inner.grad_likelihood(&self.y0, z0, &[])?;
        g.iter_mut().zip(&gl).for_each(|(a, b)| *a += b);
        Some(g)
    }
}

/// Fits step maps for every consecutive pair of `observations`.
///
/// A step whose fit fails stops the run; the failure is recorded in the
/// returned state rather than returned as an error, so the fitted prefix is
/// kept. Errors are reserved for invalid input.
pub fn assimilate(
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    opts: &AssimilationOptions,
) -> Result<SmootherState> {
    let mut state = SmootherState::new(StateKind::Smoothing, model.state_dim(), model.param_dim(), false);
    extend(&mut state, model, observations, opts)?;
    Ok(state)
}

/// Fixed-point smoother: `z_0` is handled as a static parameter, so the
/// running parameter map of the last step describes `z_0` given all data.
pub fn fixed_point_smoother(
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    opts: &AssimilationOptions,
) -> Result<SmootherState> {
    if model.param_dim() != 0 {
        return Err(Error::Domain("the fixed-point smoother needs a parameter-free model".into()));
    }
    let n = model.state_dim();
    let mut state = SmootherState::new(StateKind::FixedPoint, n, n, false);
    extend(&mut state, model, observations, opts)?;
    Ok(state)
}

fn check_extension(
    state: &SmootherState,
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    min_len: usize,
) -> Result<()> {
    validate_observations(model, observations)?;
    if observations.len() < min_len {
        return Err(Error::Sequencing(format!("at least {min_len} observations are required")));
    }
    let prefix = state.observations.len();
    let same = observations.len() >= prefix
        && state
            .observations
            .iter()
            .zip(observations)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    if !same {
        return Err(Error::Sequencing("observations do not extend the ones already assimilated".into()));
    }
    Ok(())
}

/// Continues an existing state with additional observations. Previously
/// fitted steps are left untouched; a recorded failure is retried.
pub fn extend(
    state: &mut SmootherState,
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    opts: &AssimilationOptions,
) -> Result<()> {
    if state.closed_form {
        return Err(Error::Sequencing("closed-form states are extended with extend_linear_gaussian".into()));
    }
    match state.kind {
        StateKind::Smoothing => {
            if state.state_dim != model.state_dim() || state.param_dim != model.param_dim() {
                return Err(Error::Dimension {
                    expected: state.layout().dim(),
                    got: StepLayout::new(model.state_dim(), model.param_dim()).dim(),
                });
            }
            check_extension(state, model, observations, 2)?;
            run_steps(state, model, observations, opts);
            let used = if state.steps.is_empty() { 0 } else { state.steps.len() + 1 };
            state.observations = observations[..used].to_vec();
        }
        StateKind::FixedPoint => {
            if model.param_dim() != 0 || state.state_dim != model.state_dim() {
                return Err(Error::Domain("fixed-point state does not match the model".into()));
            }
            check_extension(state, model, observations, 3)?;
            let adapter = FixedPointAdapter { inner: model, y0: observations[0].clone() };
            run_steps(state, &adapter, &observations[1..], opts);
            let used = if state.steps.is_empty() { 0 } else { state.steps.len() + 2 };
            state.observations = observations[..used].to_vec();
        }
    }
    Ok(())
}

fn run_steps(
    state: &mut SmootherState,
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    opts: &AssimilationOptions,
) {
    state.failure = None;
    for i in state.steps.len()..observations.len() - 1 {
        match fit_step(state, model, observations, i, opts) {
            Ok(rec) => state.steps.push(rec),
            Err(e) => {
                state.failure = Some(StepFailure { step: i, reason: e.to_string() });
                break;
            }
        }
    }
}

fn fit_step(
    state: &SmootherState,
    model: &dyn StateSpaceModel,
    observations: &[Vec<f64>],
    i: usize,
    opts: &AssimilationOptions,
) -> Result<StepRecord> {
    let layout = state.layout();
    let target = step_target(state, model, observations, i)?;
    let mut start = layout.identity_map(&opts.template)?;
    if let Some(prev) = (opts.warm_start && i >= 2).then(|| state.steps[i - 1].map.as_monotone()).flatten() {
        if same_structure(prev, &start) {
            start = prev.clone();
        }
    }
    let rule = opts.rule_for(layout.dim(), i)?;
    let (map, report) = compute_map(&target, &start, &rule, &opts.fit)?;
    if !report.log_normalizing_constant.is_finite() || !report.variance_diagnostic.is_finite() {
        return Err(Error::StepFailed { step: i, reason: "diagnostics are not finite".into() });
    }
    let map = Transport::Monotone(map);
    let (param_map, regression_residual) = if layout.param_dim == 0 {
        (None, None)
    } else {
        let Transport::Monotone(block) = sub_map(&map, &layout.theta().collect::<Vec<_>>())? else {
            unreachable!("restriction keeps the map type")
        };
        if i == 0 {
            (Some(block), None)
        } else {
            let prev = state.steps[i - 1]
                .param_map
                .as_ref()
                .ok_or_else(|| Error::Sequencing(format!("step {} has no parameter map", i - 1)))?;
            let (pm, res) = regress_param_map(prev, &block, opts, i)?;
            (Some(pm), Some(res))
        }
    };
    Ok(StepRecord { map, log_c: report.log_normalizing_constant, report: Some(report), param_map, regression_residual })
}

fn same_structure(a: &MonotoneTriangularMap, b: &MonotoneTriangularMap) -> bool {
    a.order() == b.order()
        && a.rectifier() == b.rectifier()
        && a.diag_basis() == b.diag_basis()
        && a.components().iter().zip(b.components()).all(|(x, y)| {
            x.active == y.active && x.offset_indices == y.offset_indices && x.integrand_indices == y.integrand_indices
        })
}

/// Regresses `prev ∘ block` onto the structure of `prev`.
fn regress_param_map(
    prev: &MonotoneTriangularMap,
    block: &MonotoneTriangularMap,
    opts: &AssimilationOptions,
    step: usize,
) -> Result<(MonotoneTriangularMap, f64)> {
    let p = prev.dim();
    let kind = RuleKind::MonteCarlo {
        points: opts.regression_points,
        seed: opts.seed ^ 0x5eed_0000_u64.wrapping_add(step as u64),
    };
    let rule = ReferenceRule::new(kind, p)?;
    let reg = regress_map(|x| prev.evaluate(&block.evaluate(x)?), prev, &rule, &opts.fit)?;
    Ok((reg.map, reg.residual))
}

/// Closed-form assimilation of a linear-Gaussian model with affine step maps.
pub fn assimilate_linear_gaussian(model: &LinearGaussianSsm, observations: &[Vec<f64>]) -> Result<SmootherState> {
    let mut state = SmootherState::new(StateKind::Smoothing, model.state_dim(), 0, true);
    extend_linear_gaussian(&mut state, model, observations)?;
    Ok(state)
}

/// Appends closed-form steps for the new observations.
pub fn extend_linear_gaussian(
    state: &mut SmootherState,
    model: &LinearGaussianSsm,
    observations: &[Vec<f64>],
) -> Result<()> {
    if !state.closed_form || state.kind != StateKind::Smoothing || state.state_dim != model.state_dim() {
        return Err(Error::Sequencing("state was not produced by closed-form assimilation of this model".into()));
    }
    check_extension(state, model, observations, 2)?;
    let layout = state.layout();
    state.failure = None;
    for i in state.steps.len()..observations.len() - 1 {
        let step = if i == 0 {
            linear_gaussian_first_step(model, &observations[0], &observations[1])
        } else {
            let prev = sub_map(&state.steps[i - 1].map, &layout.next().collect::<Vec<_>>())?;
            let Transport::Affine(prev) = prev else {
                return Err(Error::Sequencing("closed-form state holds a non-affine step".into()));
            };
            linear_gaussian_step(model, prev.shift(), prev.matrix(), &observations[i + 1])
        };
        match step {
            Ok(s) => state.steps.push(StepRecord {
                map: Transport::Affine(s.map),
                log_c: s.log_c,
                report: None,
                param_map: None,
                regression_residual: None,
            }),
            Err(e) => {
                state.failure = Some(StepFailure { step: i, reason: e.to_string() });
                break;
            }
        }
    }
    let used = if state.steps.is_empty() { 0 } else { state.steps.len() + 1 };
    state.observations = observations[..used].to_vec();
    Ok(())
}
