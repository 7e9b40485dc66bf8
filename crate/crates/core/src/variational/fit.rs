use serde::{Deserialize, Serialize};

use super::objective::{kl_objective, log_ratio_values, mean_from_values, variance_from_values};
use super::optimize::{inf_norm, minimize, Method, TraceRow};
use super::rule::ReferenceRule;
use crate::error::{Error, Result};
use crate::parallel::{chunked_reduce, map_collect, Execution};
use crate::transport::{LogDensity, MapScratch, MonotoneTriangularMap, Want};

/// Optimiser settings for [`compute_map`] and [`regress_map`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    #[serde(default)]
    pub method: Method,
    /// Convergence threshold on the gradient infinity norm.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { method: Method::Bfgs, gradient_tolerance: 1e-6, max_iterations: 500, execution: Execution::Parallel }
    }
}

/// Outcome of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(with = "crate::variational::float_text")]
    pub final_objective: f64,
    #[serde(with = "crate::variational::float_text")]
    pub variance_diagnostic: f64,
    #[serde(with = "crate::variational::float_text")]
    pub log_normalizing_constant: f64,
    pub iterations: usize,
    #[serde(with = "crate::variational::float_text")]
    pub gradient_norm: f64,
    pub converged: bool,
    /// Points clamped because the target was `-inf` or the map failed.
    pub flagged_points: usize,
    pub method: Method,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl FitReport {
    /// Optimiser trace as CSV text.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,objective,gradient_norm\n");
        for r in &self.trace {
            s.push_str(&format!("{},{},{}\n", r.iteration, r.objective, r.gradient_norm));
        }
        s
    }
}

/// Fits the coefficients of `template` so that it pushes the reference to
/// `target`, starting from the template's current coefficients.
///
/// Returns the best iterate even when the optimiser does not converge; the
/// report's `converged` flag records the outcome.
pub fn compute_map(
    target: &dyn LogDensity,
    template: &MonotoneTriangularMap,
    rule: &ReferenceRule,
    opts: &FitOptions,
) -> Result<(MonotoneTriangularMap, FitReport)> {
    use crate::transport::TransportMap;
    if target.dim() != template.dim() || rule.dim() != template.dim() {
        return Err(Error::Dimension { expected: template.dim(), got: target.dim() });
    }
    let objective = |c: &[f64]| -> (f64, Vec<f64>) {
        let m = match template.with_coefficients(c) {
            Ok(m) => m,
            Err(_) => return (f64::INFINITY, vec![0.0; c.len()]),
        };
        match kl_objective(&m, target, rule, opts.execution) {
            Ok(o) => (o.value, o.gradient),
            Err(_) => (f64::INFINITY, vec![0.0; c.len()]),
        }
    };
    let x0 = template.coefficients();
    let min = minimize(opts.method, objective, &x0, opts.gradient_tolerance, opts.max_iterations);
    if !min.value.is_finite() {
        return Err(Error::Evaluation { component: 0, reason: "objective is not finite at the starting map".into() });
    }
    let map = template.with_coefficients(&min.x)?;
    let flagged = kl_objective(&map, target, rule, opts.execution)?.flagged;
    let ratios = log_ratio_values(&map, target, rule, opts.execution);
    let report = FitReport {
        final_objective: min.value,
        variance_diagnostic: variance_from_values(rule, &ratios),
        log_normalizing_constant: mean_from_values(rule, &ratios),
        iterations: min.iterations,
        gradient_norm: inf_norm(&min.gradient),
        converged: min.converged,
        flagged_points: flagged,
        method: opts.method,
        trace: min.trace,
    };
    Ok((map, report))
}

/// Result of [`regress_map`].
#[derive(Clone, Debug)]
pub struct Regression {
    pub map: MonotoneTriangularMap,
    /// Weighted mean squared residual on the rule.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Least-squares fit of `template` to the values of `target_fn` at the rule
/// points, starting from the template's coefficients.
pub fn regress_map<F>(
    target_fn: F,
    template: &MonotoneTriangularMap,
    rule: &ReferenceRule,
    opts: &FitOptions,
) -> Result<Regression>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    use crate::transport::TransportMap;
    let n = template.dim();
    if rule.dim() != n {
        return Err(Error::Dimension { expected: n, got: rule.dim() });
    }
    let targets: Vec<Vec<f64>> =
        map_collect(opts.execution, rule.len(), |i| target_fn(rule.point(i))).into_iter().collect::<Result<_>>()?;
    if targets.iter().any(|t| t.len() != n || t.iter().any(|v| !v.is_finite())) {
        return Err(Error::Evaluation { component: 0, reason: "regression targets are not finite".into() });
    }
    let offsets = template.coefficient_offsets();
    let p = template.n_coefficients();
    let objective = |c: &[f64]| -> (f64, Vec<f64>) {
        let Ok(m) = template.with_coefficients(c) else {
            return (f64::INFINITY, vec![0.0; p]);
        };
        let comps = m.components();
        let acc = chunked_reduce(
            opts.execution,
            rule.len(),
            || (0.0, vec![0.0; p], MapScratch::default(), false),
            |acc, i| {
                let x = rule.point(i);
                let w = rule.weight(i);
                for k in 0..n {
                    if m.eval_component(k, x, Want { coefficients: true, inputs: false }, &mut acc.2).is_err() {
                        acc.3 = true;
                        return;
                    }
                    let r = acc.2.value - targets[i][comps[k].target];
                    acc.0 += w * r * r;
                    for (j, c) in (offsets[k]..offsets[k + 1]).enumerate() {
                        acc.1[c] += 2.0 * w * r * acc.2.d_value[j];
                    }
                }
            },
            |mut a, b| {
                a.0 += b.0;
                a.3 |= b.3;
                a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
                a
            },
        );
        if acc.3 {
            (f64::INFINITY, vec![0.0; p])
        } else {
            (acc.0, acc.1)
        }
    };
    let min = minimize(opts.method, objective, &template.coefficients(), opts.gradient_tolerance, opts.max_iterations);
    if !min.value.is_finite() {
        return Err(Error::Evaluation { component: 0, reason: "regression objective is not finite".into() });
    }
    let map = template.with_coefficients(&min.x)?;
    Ok(Regression { map, residual: min.value, converged: min.converged, iterations: min.iterations })
}
