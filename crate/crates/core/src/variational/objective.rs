use super::rule::{log_reference, ReferenceRule};
use crate::error::{Error, Result};
use crate::parallel::{chunked_reduce, map_collect, pairwise_sum, Execution};
use crate::transport::{LogDensity, MapScratch, MonotoneTriangularMap, TransportMap, Want};

/// Contribution assigned to a point where the target is `-inf` or the map
/// cannot be evaluated.
pub const PENALTY: f64 = 1e10;

/// Value and coefficient gradient of the sample-average KL objective.
#[derive(Clone, Debug)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Points whose contribution was clamped to [`PENALTY`].
    pub flagged: usize,
}

struct Acc {
    value: f64,
    gradient: Vec<f64>,
    flagged: usize,
    scratch: MapScratch,
    dv: Vec<f64>,
    dl: Vec<f64>,
    y: Vec<f64>,
}

/// `−Σ w_i [log π̄(T(x_i)) + log det ∇T(x_i)]` and its gradient in the map
/// coefficients.
pub fn kl_objective(
    map: &MonotoneTriangularMap,
    target: &dyn LogDensity,
    rule: &ReferenceRule,
    exec: Execution,
) -> Result<ObjectiveValue> {
    let n = map.dim();
    if target.dim() != n || rule.dim() != n {
        return Err(Error::Dimension { expected: n, got: target.dim().min(rule.dim()) });
    }
    let p = map.n_coefficients();
    let offsets = map.coefficient_offsets();
    let comps = map.components();
    let init = || Acc {
        value: 0.0,
        gradient: vec![0.0; p],
        flagged: 0,
        scratch: MapScratch::default(),
        dv: vec![0.0; p],
        dl: vec![0.0; p],
        y: vec![0.0; n],
    };
    let fold = |acc: &mut Acc, i: usize| {
        let x = rule.point(i);
        let w = rule.weight(i);
        let mut ld = 0.0;
        let mut ok = true;
        for k in 0..n {
            if map.eval_component(k, x, Want { coefficients: true, inputs: false }, &mut acc.scratch).is_err() {
                ok = false;
                break;
            }
            acc.y[comps[k].target] = acc.scratch.value;
            ld += acc.scratch.log_diag;
            let r = offsets[k]..offsets[k + 1];
            acc.dv[r.clone()].copy_from_slice(&acc.scratch.d_value);
            acc.dl[r].copy_from_slice(&acc.scratch.d_log_diag);
        }
        let (lp, glp) = if ok { target.value_and_gradient(&acc.y) } else { (f64::NEG_INFINITY, Vec::new()) };
        let term = -(lp + ld);
        if !ok || !term.is_finite() || term > PENALTY || glp.iter().any(|g| !g.is_finite()) {
            acc.value += w * PENALTY;
            acc.flagged += 1;
            return;
        }
        acc.value += w * term;
        for k in 0..n {
            let gk = glp[comps[k].target];
            for c in offsets[k]..offsets[k + 1] {
                acc.gradient[c] -= w * (gk * acc.dv[c] + acc.dl[c]);
            }
        }
    };
    let merge = |mut a: Acc, b: Acc| {
        a.value += b.value;
        a.flagged += b.flagged;
        for (x, y) in a.gradient.iter_mut().zip(&b.gradient) {
            *x += y;
        }
        a
    };
    let acc = chunked_reduce(exec, rule.len(), init, fold, merge);
    Ok(ObjectiveValue { value: acc.value, gradient: acc.gradient, flagged: acc.flagged })
}

/// `log π̄(T(x_i)) + log det ∇T(x_i) − log η(x_i)` at every rule point.
pub fn log_ratio_values(
    map: &dyn TransportMap,
    target: &dyn LogDensity,
    rule: &ReferenceRule,
    exec: Execution,
) -> Vec<f64> {
    map_collect(exec, rule.len(), |i| {
        let x = rule.point(i);
        match map.evaluate_with_log_det(x) {
            Ok((y, ld)) => {
                let v = target.log_density(&y) + ld - log_reference(x);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    })
}

fn weighted_mean(rule: &ReferenceRule, values: &[f64]) -> f64 {
    let terms: Vec<f64> = values.iter().zip(rule.weights()).map(|(v, w)| v * w).collect();
    pairwise_sum(&terms) / pairwise_sum(rule.weights())
}

/// Half the weighted variance of the log-ratio; near zero for an exact map.
pub fn variance_diagnostic(
    map: &dyn TransportMap,
    target: &dyn LogDensity,
    rule: &ReferenceRule,
    exec: Execution,
) -> f64 {
    let v = log_ratio_values(map, target, rule, exec);
    variance_from_values(rule, &v)
}

pub(crate) fn variance_from_values(rule: &ReferenceRule, v: &[f64]) -> f64 {
    if v.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    let mean = weighted_mean(rule, v);
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    0.5 * weighted_mean(rule, &sq)
}

/// Weighted mean of the log-ratio, an estimate of the log normalising
/// constant of `target`.
pub fn log_normalizing_constant(
    map: &dyn TransportMap,
    target: &dyn LogDensity,
    rule: &ReferenceRule,
    exec: Execution,
) -> f64 {
    let v = log_ratio_values(map, target, rule, exec);
    weighted_mean(rule, &v)
}

pub(crate) fn mean_from_values(rule: &ReferenceRule, v: &[f64]) -> f64 {
    weighted_mean(rule, v)
}
