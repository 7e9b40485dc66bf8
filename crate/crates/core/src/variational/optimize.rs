//! Unconstrained minimisers used for map fitting.

use serde::{Deserialize, Serialize};

/// Quasi-Newton or truncated Newton.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Bfgs,
    /// Newton-CG with Hessian–vector products from gradient differences.
    NewtonCg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;

/// Backtracking line search; returns the accepted point, value and gradient.
///
/// Besides the Armijo condition, a step is accepted under the approximate
/// Wolfe test once value differences fall below rounding, which lets the
/// gradient keep shrinking near the optimum.
fn armijo<F>(f: &F, x: &[f64], fx: f64, g: &[f64], p: &[f64]) -> Option<(Vec<f64>, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let slope = dot(g, p);
    if slope >= 0.0 {
        return None;
    }
    let noise = 1e-12 * fx.abs().max(1.0);
    let mut alpha = 1.0;
    while alpha > MIN_STEP {
        let xn: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
        if xn == x {
            return None;
        }
        let (fn_, gn) = f(&xn);
        if fn_.is_finite() {
            if fn_ < fx && fn_ <= fx + ARMIJO * alpha * slope {
                return Some((xn, fn_, gn));
            }
            let dn = dot(&gn, p);
            if fn_ <= fx + noise && dn >= 0.9 * slope && dn <= -0.8 * slope {
                return Some((xn, fn_, gn));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// BFGS on the inverse Hessian with Armijo backtracking. Iterations whose
/// curvature condition fails skip the update.
pub fn bfgs<F>(f: F, x0: &[f64], gtol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    reset(&mut h, 1.0);
    let mut fresh = true;
    let mut trace = vec![TraceRow { iteration: 0, objective: fx, gradient_norm: inf_norm(&g) }];
    let mut it = 0;
    let mut converged = inf_norm(&g) <= gtol;
    while !converged && it < max_iter {
        let mut p: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut step = armijo(&f, &x, fx, &g, &p);
        if step.is_none() && !fresh {
            reset(&mut h, 1.0);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            step = armijo(&f, &x, fx, &g, &p);
        }
        let Some((xn, fn_, gn)) = step else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                reset(&mut h, sy / dot(&y, &y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
        it += 1;
        trace.push(TraceRow { iteration: it, objective: fx, gradient_norm: inf_norm(&g) });
        converged = inf_norm(&g) <= gtol;
    }
    Minimum { x, value: fx, gradient: g, iterations: it, converged, trace }
}

/// Truncated Newton: conjugate gradients on finite-difference Hessian–vector
/// products, stopped at negative curvature, followed by Armijo backtracking.
pub fn newton_cg<F>(f: F, x0: &[f64], gtol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut trace = vec![TraceRow { iteration: 0, objective: fx, gradient_norm: inf_norm(&g) }];
    let mut it = 0;
    let mut converged = inf_norm(&g) <= gtol;
    while !converged && it < max_iter {
        let gnorm = dot(&g, &g).sqrt();
        let xnorm = dot(&x, &x).sqrt();
        let hv = |v: &[f64]| -> Vec<f64> {
            let vn = dot(v, v).sqrt();
            let eps = 1e-7 * (1.0 + xnorm) / vn.max(1e-300);
            let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + eps * b).collect();
            let (_, gp) = f(&xp);
            gp.iter().zip(&g).map(|(a, b)| (a - b) / eps).collect()
        };
        let tol = (0.5f64).min(gnorm.sqrt()) * gnorm;
        let mut z = vec![0.0; n];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        for cg in 0..2 * n.max(1) {
            let bd = hv(&d);
            let curv = dot(&d, &bd);
            if curv <= 1e-14 * dot(&d, &d) {
                if cg == 0 {
                    z = d.clone();
                }
                break;
            }
            let alpha = rr / curv;
            for i in 0..n {
                z[i] += alpha * d[i];
                r[i] -= alpha * bd[i];
            }
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= tol {
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                d[i] = r[i] + beta * d[i];
            }
        }
        let mut step = armijo(&f, &x, fx, &g, &z);
        if step.is_none() {
            let sd: Vec<f64> = g.iter().map(|v| -v).collect();
            step = armijo(&f, &x, fx, &g, &sd);
        }
        let Some((xn, fn_, gn)) = step else { break };
        x = xn;
        fx = fn_;
        g = gn;
        it += 1;
        trace.push(TraceRow { iteration: it, objective: fx, gradient_norm: inf_norm(&g) });
        converged = inf_norm(&g) <= gtol;
    }
    Minimum { x, value: fx, gradient: g, iterations: it, converged, trace }
}

pub fn minimize<F>(method: Method, f: F, x0: &[f64], gtol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    match method {
        Method::Bfgs => bfgs(f, x0, gtol, max_iter),
        Method::NewtonCg => newton_cg(f, x0, gtol, max_iter),
    }
}
