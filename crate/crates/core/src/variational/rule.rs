use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

/// How to build a weighted point set under the standard normal reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleKind {
    MonteCarlo { points: usize, seed: u64 },
    GaussHermite { order: usize },
}

impl RuleKind {
    /// Tensor Gauss–Hermite of order 10 up to four dimensions, otherwise
    /// 5000 seeded Monte Carlo points.
    pub fn default_for(dim: usize, seed: u64) -> Self {
        if dim <= 4 {
            RuleKind::GaussHermite { order: 10 }
        } else {
            RuleKind::MonteCarlo { points: 5000, seed }
        }
    }
}

/// Weighted points approximating expectations under `N(0, I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceRule {
    pub kind: RuleKind,
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl ReferenceRule {
    pub fn new(kind: RuleKind, dim: usize) -> Result<Self> {
        match kind {
            RuleKind::MonteCarlo { points, seed } => {
                if points == 0 {
                    return Err(Error::Config("Monte Carlo rule needs at least one point".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pts: Vec<f64> = (0..points * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                Ok(Self { kind, dim, points: pts, weights: vec![1.0 / points as f64; points] })
            }
            RuleKind::GaussHermite { order } => {
                if order == 0 {
                    return Err(Error::Config("Gauss–Hermite order must be positive".into()));
                }
                let total = order.checked_pow(dim as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| {
                    Error::Config(format!("tensor rule of order {order} in {dim} dimensions is too large"))
                })?;
                let (x, w) = gauss_hermite(order);
                let mut points = Vec::with_capacity(total * dim);
                let mut weights = Vec::with_capacity(total);
                let mut idx = vec![0usize; dim];
                for _ in 0..total {
                    let mut wt = 1.0;
                    for &i in &idx {
                        points.push(x[i]);
                        wt *= w[i];
                    }
                    weights.push(wt);
                    for d in (0..dim).rev() {
                        idx[d] += 1;
                        if idx[d] < order {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
                Ok(Self { kind, dim, points, weights })
            }
        }
    }

    /// Rule from explicit points and weights.
    pub fn from_points(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension { expected: dim, got: points.first().map_or(0, Vec::len) });
        }
        let n = points.len();
        Ok(Self { kind: RuleKind::MonteCarlo { points: n, seed: 0 }, dim, points: points.concat(), weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Standard normal log-density in `x.len()` dimensions.
pub fn log_reference(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * sq - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}
