use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::LinearGaussianSsm;
use crate::transport::AffineMap;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn lower_cholesky(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Matrix(format!("{what} is not positive definite")))
}

/// Lower-triangular factor `L` with `L Lᵀ = Σ_j B_j B_jᵀ` via QR of the
/// stacked transposes, columns signed so the diagonal is non-negative.
fn sqrt_sum(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut stacked = DMatrix::zeros(cols, n);
    let mut r0 = 0;
    for b in blocks {
        stacked.view_mut((r0, 0), (b.ncols(), n)).copy_from(&b.transpose());
        r0 += b.ncols();
    }
    let mut l = stacked.qr().r().transpose();
    normalize_columns(&mut l);
    l
}

fn normalize_columns(l: &mut DMatrix<f64>) {
    for j in 0..l.ncols().min(l.nrows()) {
        if l[(j, j)] < 0.0 {
            l.column_mut(j).neg_mut();
        }
    }
}

/// Square-root measurement update in array form.
///
/// Returns the updated mean, the lower factor of the updated covariance and
/// `log N(y; H μ, H P Hᵀ + R)`.
pub fn sqrt_kalman_update(
    mean: &DVector<f64>,
    sqrt_cov: &DMatrix<f64>,
    h: &DMatrix<f64>,
    sqrt_r: &DMatrix<f64>,
    y: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let n = mean.len();
    let d = h.nrows();
    let mut pre = DMatrix::zeros(d + n, d + n);
    pre.view_mut((0, 0), (d, d)).copy_from(sqrt_r);
    pre.view_mut((0, d), (d, n)).copy_from(&(h * sqrt_cov));
    pre.view_mut((d, d), (n, n)).copy_from(sqrt_cov);
    let mut post = pre.transpose().qr().r().transpose();
    normalize_columns(&mut post);
    let ls = post.view((0, 0), (d, d)).into_owned();
    let gbar = post.view((d, 0), (n, d)).into_owned();
    let lf = post.view((d, d), (n, n)).into_owned();
    if ls.diagonal().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Matrix("innovation covariance is singular".into()));
    }
    let innov = DVector::from_column_slice(y) - h * mean;
    let white =
        ls.solve_lower_triangular(&innov).ok_or_else(|| Error::Matrix("innovation factor is singular".into()))?;
    let log_det: f64 = ls.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let log_pred = -0.5 * (d as f64 * LN_2PI + log_det + white.norm_squared());
    Ok((mean + gbar * white, lf, log_pred))
}

/// Closed-form affine step map with its filtering output.
#[derive(Clone, Debug)]
pub struct LinearGaussianStep {
    /// Map on `(x_k, x_{k+1})`, with blocks `[[A, B], [0, C_k]]`.
    pub map: AffineMap,
    /// Filtering mean `c_k`.
    pub mean: DVector<f64>,
    /// Lower factor `C_k` of the filtering covariance.
    pub sqrt_cov: DMatrix<f64>,
    pub log_c: f64,
}

/// Exact step for the target
/// `N(x; m, S) N(z; G x + g, Q) N(y; H z, R)` over `(x, z)`.
pub(crate) fn conditional_step(
    model: &LinearGaussianSsm,
    m: &DVector<f64>,
    sqrt_s: &DMatrix<f64>,
    g_mat: &DMatrix<f64>,
    g_vec: &DVector<f64>,
    y_next: &[f64],
) -> Result<LinearGaussianStep> {
    let n = m.len();
    let q = model.q();
    let sqrt_q = lower_cholesky(q, "Q")?;
    let sqrt_r = lower_cholesky(model.r(), "R")?;
    let pred_mean = g_mat * m + g_vec;
    let pred_sqrt = sqrt_sum(&[&(g_mat * sqrt_s), &sqrt_q]);
    let (c_k, big_c, log_c) = sqrt_kalman_update(&pred_mean, &pred_sqrt, model.h(), &sqrt_r, y_next)?;

    let s_inv = {
        let li = sqrt_s.clone().try_inverse().ok_or_else(|| Error::Matrix("prior factor is singular".into()))?;
        li.transpose() * li
    };
    let q_inv = nalgebra::Cholesky::new(q.clone()).expect("checked above").inverse();
    let gt_qinv = g_mat.transpose() * &q_inv;
    let j = &s_inv + &gt_qinv * g_mat;
    let eig = nalgebra::SymmetricEigen::new((&j + j.transpose()) * 0.5);
    if eig.eigenvalues.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Matrix("conditional precision is not positive definite".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let a_mat = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let j_inv = &a_mat * &a_mat;
    let b_mat = &j_inv * &gt_qinv * &big_c;
    let shift_a = &j_inv * (&s_inv * m + &gt_qinv * (&c_k - g_vec));

    let mut mat = DMatrix::zeros(2 * n, 2 * n);
    mat.view_mut((0, 0), (n, n)).copy_from(&a_mat);
    mat.view_mut((0, n), (n, n)).copy_from(&b_mat);
    mat.view_mut((n, n), (n, n)).copy_from(&big_c);
    let mut shift = DVector::zeros(2 * n);
    shift.rows_mut(0, n).copy_from(&shift_a);
    shift.rows_mut(n, n).copy_from(&c_k);
    Ok(LinearGaussianStep { map: AffineMap::new(mat, shift)?, mean: c_k, sqrt_cov: big_c, log_c })
}

/// Step `k ≥ 1` given the previous filtering factorisation `(c_{k-1}, C_{k-1})`.
pub fn linear_gaussian_step(
    model: &LinearGaussianSsm,
    prev_mean: &DVector<f64>,
    prev_sqrt: &DMatrix<f64>,
    y_next: &[f64],
) -> Result<LinearGaussianStep> {
    let n = prev_mean.len();
    let g_mat = model.f() * prev_sqrt;
    let g_vec = model.f() * prev_mean;
    conditional_step(model, &DVector::zeros(n), &DMatrix::identity(n, n), &g_mat, &g_vec, y_next)
}

/// Step 0 on `(z_0, z_1)` given `y_0, y_1`.
pub fn linear_gaussian_first_step(model: &LinearGaussianSsm, y0: &[f64], y1: &[f64]) -> Result<LinearGaussianStep> {
    let n = model.mean0().len();
    let sqrt_r = lower_cholesky(model.r(), "R")?;
    let sqrt0 = lower_cholesky(model.cov0(), "initial covariance")?;
    let (m0, s0, log_y0) = sqrt_kalman_update(model.mean0(), &sqrt0, model.h(), &sqrt_r, y0)?;
    let mut step = conditional_step(model, &m0, &s0, model.f(), &DVector::zeros(n), y1)?;
    step.log_c += log_y0;
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model() -> LinearGaussianSsm {
        let s = |v: f64| DMatrix::from_element(1, 1, v);
        LinearGaussianSsm::new(s(1.0), s(1.0), s(1.0), s(1.0), DVector::zeros(1), s(1.0)).unwrap()
    }

    #[test]
    fn scalar_substitution() {
        let m = scalar_model();
        let st = linear_gaussian_step(&m, &DVector::zeros(1), &DMatrix::identity(1, 1), &[0.8]).unwrap();
        let a = st.map.matrix();
        let c_k = st.mean[0];
        assert!((a[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((a[(0, 1)] - 0.5 * st.sqrt_cov[(0, 0)]).abs() < 1e-14);
        assert!((st.map.shift()[0] - 0.5 * c_k).abs() < 1e-14);
        // Predictive N(0, 2) updated with y = 0.8 and unit noise.
        assert!((c_k - 0.8 * 2.0 / 3.0).abs() < 1e-14);
        assert!((st.sqrt_cov[(0, 0)] - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn decoupled_dynamics() {
        let s = |v: f64| DMatrix::from_element(1, 1, v);
        let m = LinearGaussianSsm::new(s(0.0), s(0.5), s(1.0), s(1.0), DVector::zeros(1), s(1.0)).unwrap();
        let st = linear_gaussian_step(&m, &DVector::from_vec(vec![0.3]), &s(0.7), &[0.1]).unwrap();
        assert_eq!(st.map.matrix()[(0, 1)], 0.0);
        assert!((st.map.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn update_matches_covariance_form() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let h = DMatrix::from_row_slice(1, 2, &[1.0, -0.5]);
        let r = DMatrix::from_element(1, 1, 0.4);
        let mean = DVector::from_vec(vec![0.1, 0.2]);
        let (mu, l, lp) =
            sqrt_kalman_update(&mean, &lower_cholesky(&p, "p").unwrap(), &h, &lower_cholesky(&r, "r").unwrap(), &[1.0])
                .unwrap();
        let s = (&h * &p * h.transpose() + &r)[(0, 0)];
        let k = &p * h.transpose() / s;
        let innov = 1.0 - (&h * &mean)[0];
        assert!((mu - (&mean + &k * innov)).amax() < 1e-14);
        let pf = &p - &k * &h * &p;
        assert!((&l * l.transpose() - pf).amax() < 1e-14);
        assert!((lp - (-0.5 * (LN_2PI + s.ln() + innov * innov / s))).abs() < 1e-14);
    }
}
