use super::UndirectedGraph;
use crate::error::{Error, Result};
use crate::transport::LogDensity;

/// Settings for [`pairwise_imap`].
#[derive(Clone, Debug)]
pub struct ImapOptions {
    /// Finite-difference step for mixed second derivatives.
    pub step: f64,
    /// Edge threshold relative to the largest absolute Hessian entry seen.
    pub relative_tolerance: f64,
}

impl Default for ImapOptions {
    fn default() -> Self {
        Self { step: 1e-3, relative_tolerance: 1e-6 }
    }
}

/// Estimates a pairwise I-map by probing mixed second derivatives of
/// `log_pi` with central differences.
///
/// An edge `(i, j)` is added when `|∂²_{ij} log π|` exceeds the tolerance at
/// any probe point.
pub fn pairwise_imap(log_pi: &dyn LogDensity, probes: &[Vec<f64>], opts: &ImapOptions) -> Result<UndirectedGraph> {
    let n = log_pi.dim();
    let h = opts.step;
    let mut cross = vec![vec![0.0f64; n]; n];
    let mut scale = 0.0f64;
    for (p, x) in probes.iter().enumerate() {
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        let f = |y: &[f64]| -> Result<f64> {
            let v = log_pi.log_density(y);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::FlaggedProbe { index: p })
            }
        };
        let f0 = f(x)?;
        let mut y = x.clone();
        for i in 0..n {
            y[i] = x[i] + h;
            let fp = f(&y)?;
            y[i] = x[i] - h;
            let fm = f(&y)?;
            y[i] = x[i];
            scale = scale.max(((fp - 2.0 * f0 + fm) / (h * h)).abs());
            for j in i + 1..n {
                let mut eval = |di: f64, dj: f64| {
                    y[i] = x[i] + di;
                    y[j] = x[j] + dj;
                    let v = f(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let d = (eval(h, h)? - eval(h, -h)? - eval(-h, h)? + eval(-h, -h)?) / (4.0 * h * h);
                cross[i][j] = cross[i][j].max(d.abs());
                scale = scale.max(d.abs());
            }
        }
    }
    let mut g = UndirectedGraph::new(n);
    let tol = opts.relative_tolerance * scale;
    for i in 0..n {
        for j in i + 1..n {
            if cross[i][j] > tol {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}
