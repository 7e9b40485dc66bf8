use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal as Normal01;
use serde::{Deserialize, Serialize};

use super::gaussian::{cholesky, Gaussian};
use crate::error::{Error, Result};
use crate::sequential::StateSpaceModel;

/// Time-invariant linear-Gaussian state-space model
/// `z_{k+1} = F z_k + ε`, `y_k = H z_k + δ`, `ε ~ N(0,Q)`, `δ ~ N(0,R)`,
/// `z_0 ~ N(μ0, Γ0)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "LinearGaussianRepr", into = "LinearGaussianRepr")]
pub struct LinearGaussianSsm {
    f: DMatrix<f64>,
    q: DMatrix<f64>,
    h: DMatrix<f64>,
    r: DMatrix<f64>,
    initial: Gaussian,
    q_inv: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    q_log_norm: f64,
    r_log_norm: f64,
}

/// Row-major serialized form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearGaussianRepr {
    pub f: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub mean0: Vec<f64>,
    pub cov0: Vec<Vec<f64>>,
}

fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Config(format!("matrix `{what}` has ragged rows")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl TryFrom<LinearGaussianRepr> for LinearGaussianSsm {
    type Error = Error;
    fn try_from(r: LinearGaussianRepr) -> Result<Self> {
        Self::new(
            from_rows(&r.f, "f")?,
            from_rows(&r.q, "q")?,
            from_rows(&r.h, "h")?,
            from_rows(&r.r, "r")?,
            DVector::from_vec(r.mean0),
            from_rows(&r.cov0, "cov0")?,
        )
    }
}

impl From<LinearGaussianSsm> for LinearGaussianRepr {
    fn from(m: LinearGaussianSsm) -> Self {
        Self {
            f: to_rows(&m.f),
            q: to_rows(&m.q),
            h: to_rows(&m.h),
            r: to_rows(&m.r),
            mean0: m.initial.mean().as_slice().to_vec(),
            cov0: to_rows(m.initial.covariance()),
        }
    }
}

fn precision_and_norm(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, f64)> {
    let c = cholesky(m, what)?;
    let log_det: f64 = c.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    Ok((c.inverse(), -0.5 * (m.nrows() as f64 * (2.0 * std::f64::consts::PI).ln() + log_det)))
}

impl LinearGaussianSsm {
    pub fn new(
        f: DMatrix<f64>,
        q: DMatrix<f64>,
        h: DMatrix<f64>,
        r: DMatrix<f64>,
        mean0: DVector<f64>,
        cov0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = f.nrows();
        let d = h.nrows();
        let shape_ok =
            f.ncols() == n && q.shape() == (n, n) && h.ncols() == n && r.shape() == (d, d) && mean0.len() == n;
        if !shape_ok || n == 0 {
            return Err(Error::Config("linear-Gaussian matrices have inconsistent shapes".into()));
        }
        let (q_inv, q_log_norm) = precision_and_norm(&q, "Q")?;
        let (r_inv, r_log_norm) = precision_and_norm(&r, "R")?;
        let initial = Gaussian::new(mean0, cov0)?;
        Ok(Self { f, q, h, r, initial, q_inv, r_inv, q_log_norm, r_log_norm })
    }

    /// Random system with spectral radius of `F` at most 0.9.
    pub fn random_stable<R: Rng>(n: usize, d: usize, rng: &mut R) -> Self {
        let mut gauss = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(Normal01));
        let a = gauss(n, n);
        let radius = a.clone().complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max);
        let f = a * (0.9 / radius.max(0.9));
        let spd = |m: DMatrix<f64>, k: usize| &m * m.transpose() / k as f64 + DMatrix::identity(k, k) * 0.1;
        let q = spd(gauss(n, n), n) * 0.5;
        let h = gauss(d, n);
        let r = spd(gauss(d, d), d) * 0.3;
        let mean0 = DVector::from_fn(n, |_, _| 0.0);
        let cov0 = spd(gauss(n, n), n);
        Self::new(f, q, h, r, mean0, cov0).expect("constructed SPD")
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn mean0(&self) -> &DVector<f64> {
        self.initial.mean()
    }
    pub fn cov0(&self) -> &DMatrix<f64> {
        self.initial.covariance()
    }

    /// Draws `z_0`.
    pub fn sample_initial<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let l = cholesky(self.cov0(), "cov0").expect("validated").l();
        self.mean0() + l * DVector::from_fn(self.state_dim(), |_, _| rng.sample::<f64, _>(Normal01))
    }

    /// Draws `z_{k+1}` given `z_k`.
    pub fn sample_transition<R: Rng>(&self, z: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let l = cholesky(&self.q, "Q").expect("validated").l();
        &self.f * z + l * DVector::from_fn(self.state_dim(), |_, _| rng.sample::<f64, _>(Normal01))
    }

    /// Draws `y_k` given `z_k`.
    pub fn sample_observation<R: Rng>(&self, z: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let l = cholesky(&self.r, "R").expect("validated").l();
        &self.h * z + l * DVector::from_fn(self.obs_dim(), |_, _| rng.sample::<f64, _>(Normal01))
    }

    fn residual_term(log_norm: f64, prec: &DMatrix<f64>, x: &[f64], mean: DVector<f64>) -> (f64, DVector<f64>) {
        let r = DVector::from_column_slice(x) - mean;
        let pr = prec * &r;
        (log_norm - 0.5 * r.dot(&pr), pr)
    }
}

impl StateSpaceModel for LinearGaussianSsm {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }
    fn obs_dim(&self) -> usize {
        self.h.nrows()
    }
    fn log_initial(&self, z0: &[f64], _theta: &[f64]) -> f64 {
        self.initial.eval(z0).0
    }
    fn log_transition(&self, z_next: &[f64], z: &[f64], _theta: &[f64]) -> f64 {
        let mean = &self.f * DVector::from_column_slice(z);
        Self::residual_term(self.q_log_norm, &self.q_inv, z_next, mean).0
    }
    fn log_likelihood(&self, y: &[f64], z: &[f64], _theta: &[f64]) -> f64 {
        let mean = &self.h * DVector::from_column_slice(z);
        Self::residual_term(self.r_log_norm, &self.r_inv, y, mean).0
    }
    fn grad_initial(&self, z0: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.initial.eval(z0).1.as_slice().to_vec(), vec![]))
    }
    fn grad_transition(&self, z_next: &[f64], z: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mean = &self.f * DVector::from_column_slice(z);
        let (_, pr) = Self::residual_term(self.q_log_norm, &self.q_inv, z_next, mean);
        let dz = self.f.tr_mul(&pr);
        Some(((-pr).as_slice().to_vec(), dz.as_slice().to_vec(), vec![]))
    }
    fn grad_likelihood(&self, y: &[f64], z: &[f64], _theta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let mean = &self.h * DVector::from_column_slice(z);
        let (_, pr) = Self::residual_term(self.r_log_norm, &self.r_inv, y, mean);
        Some((self.h.tr_mul(&pr).as_slice().to_vec(), vec![]))
    }
}
