//! Linear-Gaussian assimilation checked against the Kalman/RTS oracle.

use lowdim::models::{kalman_rts, simulate, LinearGaussianSsm};
use lowdim::parallel::Execution;
use lowdim::sequential::{
    assimilate, assimilate_linear_gaussian, lag1_map, sample_filtering, sample_smoothing, sub_map, AssimilationOptions,
    SmootherState,
};
use lowdim::transport::{MapTemplate, TransportMap};
use lowdim::variational::{FitOptions, RuleKind};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mean and covariance of the pushforward of `N(0, I)` through an affine map.
fn affine_moments(map: &dyn TransportMap) -> (DVector<f64>, DMatrix<f64>) {
    let n = map.dim();
    let mean = DVector::from_vec(map.evaluate(&vec![0.0; n]).unwrap());
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = DVector::from_vec(map.evaluate(&e).unwrap()) - &mean;
        jac.set_column(j, &col);
    }
    let cov = &jac * jac.transpose();
    (mean, cov)
}

fn system(seed: u64, n: usize, d: usize, len: usize) -> (LinearGaussianSsm, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = LinearGaussianSsm::random_stable(n, d, &mut rng);
    let obs = simulate(&model, len, None, seed + 100).unwrap().observations;
    (model, obs)
}

fn filtering_error(state: &SmootherState, model: &LinearGaussianSsm, obs: &[Vec<f64>]) -> f64 {
    let oracle = kalman_rts(model, obs).unwrap();
    let next: Vec<usize> = state.layout().next().collect();
    let mut worst: f64 = 0.0;
    for (k, step) in state.steps.iter().enumerate() {
        let block = sub_map(&step.map, &next).unwrap();
        let (m, c) = affine_moments(&block);
        worst = worst.max((m - &oracle.filtered_means[k + 1]).amax());
        worst = worst.max((c - &oracle.filtered_covs[k + 1]).amax());
    }
    worst
}

fn lag1_error(state: &SmootherState, model: &LinearGaussianSsm, obs: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..state.steps.len() {
        let oracle = kalman_rts(model, &obs[..k + 2]).unwrap();
        let (m, c) = oracle.smoothed_pair(k);
        let (mm, cc) = affine_moments(&lag1_map(state, k).unwrap());
        worst = worst.max((mm - m).amax()).max((cc - c).amax());
    }
    worst
}

#[test]
fn closed_form_matches_kalman() {
    let (model, obs) = system(11, 2, 1, 20);
    let state = assimilate_linear_gaussian(&model, &obs).unwrap();
    assert_eq!(state.steps.len(), 19);
    assert!(filtering_error(&state, &model, &obs) < 1e-8);
    assert!(lag1_error(&state, &model, &obs) < 1e-8);
    let ll = kalman_rts(&model, &obs).unwrap().log_likelihood;
    assert!((state.evidence() - ll).abs() < 1e-8, "{} vs {ll}", state.evidence());
}

#[test]
fn closed_form_full_joint_matches_rts() {
    for seed in 0..5 {
        let n = 1 + seed as usize % 3;
        let (model, obs) = system(seed, n, 2, 20);
        let state = assimilate_linear_gaussian(&model, &obs).unwrap();
        let oracle = kalman_rts(&model, &obs).unwrap();
        // The smoothing map is a composition of affine maps.
        let dim = 20 * n;
        let eval = |x: &[f64]| {
            let mut x = x.to_vec();
            for j in (0..state.steps.len()).rev() {
                let out = state.steps[j].map.evaluate(&x[j * n..(j + 2) * n]).unwrap();
                x[j * n..(j + 2) * n].copy_from_slice(&out);
            }
            DVector::from_vec(x)
        };
        let mean = eval(&vec![0.0; dim]);
        let mut jac = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            jac.set_column(j, &(eval(&e) - &mean));
        }
        let cov = &jac * jac.transpose();
        for k in 0..20 {
            assert!((mean.rows(k * n, n) - &oracle.smoothed_means[k]).amax() < 1e-8);
            assert!((cov.view((k * n, k * n), (n, n)) - &oracle.smoothed_covs[k]).amax() < 1e-8);
            if k + 1 < 20 {
                assert!((cov.view((k * n, (k + 1) * n), (n, n)) - &oracle.smoothed_cross[k]).amax() < 1e-8);
            }
        }
    }
}

#[test]
fn fitted_linear_maps_match_kalman() {
    let (model, obs) = system(11, 2, 1, 20);
    let mut opts = AssimilationOptions::new(MapTemplate::linear());
    opts.fit = FitOptions { gradient_tolerance: 1e-9, ..FitOptions::default() };
    // Order 4 integrates the quadratic objective of an affine map exactly.
    opts.rule = Some(RuleKind::GaussHermite { order: 4 });
    let state = assimilate(&model, &obs, &opts).unwrap();
    assert!(state.failure.is_none(), "{:?}", state.failure);
    assert_eq!(state.steps.len(), 19);
    let err = filtering_error(&state, &model, &obs);
    assert!(err < 1e-5, "filtering error {err}");
    let ll = kalman_rts(&model, &obs).unwrap().log_likelihood;
    assert!((state.evidence() - ll).abs() < 1e-6, "{} vs {ll}", state.evidence());
}

#[test]
fn closed_form_sampling_is_seeded() {
    let (model, obs) = system(3, 2, 1, 8);
    let state = assimilate_linear_gaussian(&model, &obs).unwrap();
    let a = sample_smoothing(&state, 50, 9, Execution::Parallel).unwrap();
    let b = sample_smoothing(&state, 50, 9, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let f = sample_filtering(&state, 10, 9, Execution::Parallel).unwrap();
    assert_eq!(f[0].len(), 2);
}
