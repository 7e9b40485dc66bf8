use nalgebra::{DMatrix, DVector};

use super::gaussian::cholesky;
use super::linear_gaussian::LinearGaussianSsm;
use crate::error::{Error, Result};
use crate::sequential::StateSpaceModel;

/// Filtering, prediction and smoothing moments of a linear-Gaussian model.
#[derive(Clone, Debug)]
pub struct KalmanOutput {
    /// `E[z_k | y_{0:k-1}]`; index 0 holds the initial moments.
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub smoothed_means: Vec<DVector<f64>>,
    pub smoothed_covs: Vec<DMatrix<f64>>,
    /// `Cov(z_k, z_{k+1} | y_{0:N})` for `k < N`.
    pub smoothed_cross: Vec<DMatrix<f64>>,
    /// Prediction-error decomposition of `log p(y_{0:N})`.
    pub log_likelihood: f64,
}

impl KalmanOutput {
    /// Mean and covariance of `(z_k, z_{k+1})` under the smoother.
    pub fn smoothed_pair(&self, k: usize) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.smoothed_means[k].len();
        let mut mean = DVector::zeros(2 * n);
        mean.rows_mut(0, n).copy_from(&self.smoothed_means[k]);
        mean.rows_mut(n, n).copy_from(&self.smoothed_means[k + 1]);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.smoothed_covs[k]);
        cov.view_mut((n, n), (n, n)).copy_from(&self.smoothed_covs[k + 1]);
        cov.view_mut((0, n), (n, n)).copy_from(&self.smoothed_cross[k]);
        cov.view_mut((n, 0), (n, n)).copy_from(&self.smoothed_cross[k].transpose());
        (mean, cov)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Covariance-form Kalman filter with Joseph update and a
/// Rauch–Tung–Striebel backward pass.
pub fn kalman_rts(model: &LinearGaussianSsm, observations: &[Vec<f64>]) -> Result<KalmanOutput> {
    let n = model.state_dim();
    let d = model.obs_dim();
    if observations.is_empty() {
        return Err(Error::Sequencing("no observations".into()));
    }
    let (f, q, h, r) = (model.f(), model.q(), model.h(), model.r());
    let eye = DMatrix::<f64>::identity(n, n);
    let mut out = KalmanOutput {
        predicted_means: vec![],
        predicted_covs: vec![],
        filtered_means: vec![],
        filtered_covs: vec![],
        smoothed_means: vec![],
        smoothed_covs: vec![],
        smoothed_cross: vec![],
        log_likelihood: 0.0,
    };
    let mut m = model.mean0().clone();
    let mut p = model.cov0().clone();
    for (k, y) in observations.iter().enumerate() {
        if y.len() != d {
            return Err(Error::Dimension { expected: d, got: y.len() });
        }
        if k > 0 {
            m = f * &m;
            p = symmetrize(f * &p * f.transpose() + q);
        }
        out.predicted_means.push(m.clone());
        out.predicted_covs.push(p.clone());
        let s = symmetrize(h * &p * h.transpose() + r);
        let chol = cholesky(&s, "innovation covariance")?;
        let innov = DVector::from_column_slice(y) - h * &m;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let sol = chol.solve(&innov);
        out.log_likelihood -= 0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + innov.dot(&sol));
        let gain = chol.solve(&(h * &p)).transpose();
        m = &m + &gain * innov;
        let ikh = &eye - &gain * h;
        p = symmetrize(&ikh * &p * ikh.transpose() + &gain * r * gain.transpose());
        out.filtered_means.push(m.clone());
        out.filtered_covs.push(p.clone());
    }
    let len = observations.len();
    out.smoothed_means = out.filtered_means.clone();
    out.smoothed_covs = out.filtered_covs.clone();
    out.smoothed_cross = vec![DMatrix::zeros(n, n); len - 1];
    for k in (0..len - 1).rev() {
        let pp = &out.predicted_covs[k + 1];
        let chol = cholesky(pp, "predicted covariance")?;
        let g = chol.solve(&(f * &out.filtered_covs[k])).transpose();
        let dm = &out.smoothed_means[k + 1] - &out.predicted_means[k + 1];
        out.smoothed_means[k] = &out.filtered_means[k] + &g * dm;
        let dp = &out.smoothed_covs[k + 1] - pp;
        out.smoothed_covs[k] = symmetrize(&out.filtered_covs[k] + &g * dp * g.transpose());
        out.smoothed_cross[k] = &g * &out.smoothed_covs[k + 1];
    }
    Ok(out)
}
