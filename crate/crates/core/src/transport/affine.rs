use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use super::TransportMap;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct AffineRepr {
    matrix: Vec<Vec<f64>>,
    shift: Vec<f64>,
}

/// Invertible affine map `x ↦ A x + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
    log_det: f64,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || shift.len() != n {
            return Err(Error::Dimension { expected: n, got: shift.len().max(matrix.ncols()) });
        }
        if matrix.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Matrix("affine map has non-finite entries".into()));
        }
        let det = LU::new(matrix.clone()).determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Matrix("affine map is singular".into()));
        }
        Ok(Self { log_det: det.abs().ln(), matrix, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n)).expect("identity is invertible")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }
}

impl TryFrom<AffineRepr> for AffineMap {
    type Error = Error;
    fn try_from(r: AffineRepr) -> Result<Self> {
        let n = r.shift.len();
        if r.matrix.len() != n || r.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Checkpoint("affine matrix shape does not match the shift".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| r.matrix[i][j]);
        Self::new(m, DVector::from_vec(r.shift))
    }
}

impl From<AffineMap> for AffineRepr {
    fn from(a: AffineMap) -> Self {
        let n = a.shift.len();
        AffineRepr {
            matrix: (0..n).map(|i| (0..n).map(|j| a.matrix[(i, j)]).collect()).collect(),
            shift: a.shift.iter().copied().collect(),
        }
    }
}

impl TransportMap for AffineMap {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let y = &self.matrix * DVector::from_column_slice(x) + &self.shift;
        Ok(y.iter().copied().collect())
    }

    fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(self.log_det)
    }

    fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: y.len() });
        }
        let rhs = DVector::from_column_slice(y) - &self.shift;
        LU::new(self.matrix.clone())
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::Matrix("affine map is singular".into()))
    }

    fn vjp(&self, _x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: v.len() });
        }
        Ok((self.matrix.transpose() * DVector::from_column_slice(v)).iter().copied().collect())
    }
}
