use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::transport::LogDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Cholesky factor of an SPD matrix, or a matrix error naming `what`.
pub(crate) fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::Matrix(format!("{what} is not square")));
    }
    if (m - m.transpose()).amax() > 1e-10 * (1.0 + m.amax()) {
        return Err(Error::Matrix(format!("{what} is not symmetric")));
    }
    nalgebra::Cholesky::new(m.clone()).ok_or_else(|| Error::Matrix(format!("{what} is not positive definite")))
}

/// Multivariate normal density with precomputed precision.
#[derive(Clone, Debug)]
pub struct Gaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::Dimension { expected: mean.len(), got: covariance.nrows() });
        }
        let chol = cholesky(&covariance, "covariance")?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let precision = chol.inverse();
        let log_norm = -0.5 * (mean.len() as f64 * LN_2PI + log_det);
        Ok(Self { mean, covariance, precision, log_norm })
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `log N(x; mean, cov)` and its gradient in `x`.
    pub fn eval(&self, x: &[f64]) -> (f64, DVector<f64>) {
        let r = DVector::from_column_slice(x) - &self.mean;
        let pr = &self.precision * &r;
        (self.log_norm - 0.5 * r.dot(&pr), -pr)
    }
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.eval(x).0
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.eval(x).1.as_slice().to_vec())
    }
}

/// Standard normal density in `dim` dimensions.
#[derive(Clone, Copy, Debug)]
pub struct StandardNormal {
    pub dim: usize,
}

impl LogDensity for StandardNormal {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * (x.len() as f64 * LN_2PI + x.iter().map(|v| v * v).sum::<f64>())
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().map(|v| -v).collect())
    }
}

/// Scalar normal log-density.
pub(crate) fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + var.ln() + r * r / var)
}

/// Two-dimensional banana: `z1 ~ N(0,1)`, `z2 - b z1² ~ N(0, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Banana {
    pub curvature: f64,
    pub sigma: f64,
}

impl Default for Banana {
    fn default() -> Self {
        Self { curvature: 1.0, sigma: 0.5 }
    }
}

/// Log-density of [`Banana`] with `σ = 0.5`.
pub fn banana_logdensity(z: &[f64; 2], curvature: f64) -> f64 {
    Banana { curvature, ..Banana::default() }.log_density(z)
}

impl LogDensity for Banana {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, z: &[f64]) -> f64 {
        log_normal(z[0], 0.0, 1.0) + log_normal(z[1] - self.curvature * z[0] * z[0], 0.0, self.sigma * self.sigma)
    }
    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let r = (z[1] - self.curvature * z[0] * z[0]) / (self.sigma * self.sigma);
        Some(vec![-z[0] + 2.0 * self.curvature * z[0] * r, -r])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::finite_difference_gradient;

    #[test]
    fn banana_without_curvature_is_a_product() {
        let b = Banana { curvature: 0.0, sigma: 0.5 };
        let z = [0.3, -0.7];
        let want = log_normal(0.3, 0.0, 1.0) + log_normal(-0.7, 0.0, 0.25);
        assert!((b.log_density(&z) - want).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_differences() {
        let b = Banana::default();
        for z in [[0.3, -0.7], [1.2, 0.4], [-2.0, 3.0]] {
            let g = b.gradient(&z).unwrap();
            let fd = finite_difference_gradient(&b, &z);
            for (a, c) in g.iter().zip(&fd) {
                assert!((a - c).abs() <= 1e-6 * (1.0 + a.abs()));
            }
        }
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let g = Gaussian::new(DVector::from_vec(vec![1.0, -1.0]), cov).unwrap();
        let x = [0.2, 0.5];
        let fd = finite_difference_gradient(&g, &x);
        for (a, c) in g.gradient(&x).unwrap().iter().zip(&fd) {
            assert!((a - c).abs() <= 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(Gaussian::new(DVector::zeros(2), cov), Err(Error::Matrix(_))));
    }
}
