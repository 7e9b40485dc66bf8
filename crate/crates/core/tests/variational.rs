//! Map fitting against targets with known answers.

use lowdim::models::{Banana, Gaussian, StandardNormal};
use lowdim::parallel::Execution;
use lowdim::transport::{FnDensity, MapTemplate, MonotoneTriangularMap, Shifted, TransportMap};
use lowdim::variational::{
    compute_map, kl_objective, regress_map, variance_diagnostic, FitOptions, Method, ReferenceRule, RuleKind,
};
use nalgebra::{DMatrix, DVector};

fn gh(order: usize, dim: usize) -> ReferenceRule {
    ReferenceRule::new(RuleKind::GaussHermite { order }, dim).unwrap()
}

fn linear_moments(map: &MonotoneTriangularMap) -> (DVector<f64>, DMatrix<f64>) {
    let n = map.dim();
    let mean = DVector::from_vec(map.evaluate(&vec![0.0; n]).unwrap());
    let jac = map.jacobian(&vec![0.0; n]).unwrap();
    (mean, &jac * jac.transpose())
}

#[test]
fn scalar_gaussian_is_recovered() {
    let target = Gaussian::new(DVector::from_vec(vec![2.0]), DMatrix::from_element(1, 1, 0.25)).unwrap();
    let template = MonotoneTriangularMap::identity(1, &MapTemplate::linear()).unwrap();
    let (map, report) = compute_map(&target, &template, &gh(10, 1), &FitOptions::default()).unwrap();
    assert!(report.converged);
    for x in [-1.5, 0.0, 0.7] {
        assert!((map.evaluate(&[x]).unwrap()[0] - (2.0 + 0.5 * x)).abs() < 1e-6);
    }
    assert!(report.variance_diagnostic < 1e-10);
    assert!(report.log_normalizing_constant.abs() < 1e-8);
}

#[test]
fn identity_map_diagnostic_for_shifted_normal() {
    // log π − log η = 3x − 4.5 under the identity, whose variance is 9.
    let target = Gaussian::new(DVector::from_vec(vec![3.0]), DMatrix::identity(1, 1)).unwrap();
    let map = MonotoneTriangularMap::identity(1, &MapTemplate::new(2)).unwrap();
    let vd = variance_diagnostic(&map, &target, &gh(10, 1), Execution::Sequential);
    assert!((vd - 4.5).abs() < 1e-10, "{vd}");
}

#[test]
fn dense_gaussian_covariance_is_recovered() {
    let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5]);
    let mean = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let target = Gaussian::new(mean.clone(), cov.clone()).unwrap();
    let template = MonotoneTriangularMap::identity(3, &MapTemplate::linear()).unwrap();
    let opts = FitOptions { gradient_tolerance: 1e-9, ..FitOptions::default() };
    let (map, report) = compute_map(&target, &template, &gh(4, 3), &opts).unwrap();
    assert!(report.converged);
    let (m, c) = linear_moments(&map);
    assert!((m - mean).amax() < 1e-5);
    assert!((c - cov).amax() < 1e-5);
}

#[test]
fn banana_is_captured_by_a_cubic_map() {
    let template = MonotoneTriangularMap::identity(2, &MapTemplate::new(3)).unwrap();
    let opts = FitOptions { max_iterations: 200, ..FitOptions::default() };
    let (map, report) = compute_map(&Banana::default(), &template, &gh(10, 2), &opts).unwrap();
    assert!(report.iterations <= 200);
    assert!(report.variance_diagnostic <= 1e-2, "{}", report.variance_diagnostic);
    // The first coordinate stays standard normal.
    for x in [-1.0, 0.5] {
        assert!((map.evaluate(&[x, 0.0]).unwrap()[0] - x).abs() < 1e-2);
    }
}

#[test]
fn newton_cg_agrees_with_bfgs() {
    let template = MonotoneTriangularMap::identity(2, &MapTemplate::new(2)).unwrap();
    let rule = gh(8, 2);
    let a = compute_map(&Banana::default(), &template, &rule, &FitOptions::default()).unwrap().1;
    let opts = FitOptions { method: Method::NewtonCg, ..FitOptions::default() };
    let b = compute_map(&Banana::default(), &template, &rule, &opts).unwrap().1;
    assert!(a.converged && b.converged);
    assert!((a.final_objective - b.final_objective).abs() < 1e-8);
}

#[test]
fn constant_shift_moves_only_the_normalizer() {
    let base = Banana::default();
    let shifted = Shifted { inner: &base, shift: -7.25 };
    let template = MonotoneTriangularMap::identity(2, &MapTemplate::new(2)).unwrap();
    let rule = gh(8, 2);
    let (m1, r1) = compute_map(&base, &template, &rule, &FitOptions::default()).unwrap();
    let (m2, r2) = compute_map(&shifted, &template, &rule, &FitOptions::default()).unwrap();
    assert!((r2.log_normalizing_constant - r1.log_normalizing_constant + 7.25).abs() < 1e-9);
    assert!((r1.variance_diagnostic - r2.variance_diagnostic).abs() < 1e-9);
    let x = [0.4, -0.9];
    let (a, b) = (m1.evaluate(&x).unwrap(), m2.evaluate(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-6));
}

#[test]
fn parallel_and_sequential_fits_are_identical() {
    let template = MonotoneTriangularMap::identity(2, &MapTemplate::new(2)).unwrap();
    let rule = ReferenceRule::new(RuleKind::MonteCarlo { points: 700, seed: 9 }, 2).unwrap();
    let par = FitOptions { execution: Execution::Parallel, ..FitOptions::default() };
    let seq = FitOptions { execution: Execution::Sequential, ..FitOptions::default() };
    let (ma, ra) = compute_map(&Banana::default(), &template, &rule, &par).unwrap();
    let (mb, rb) = compute_map(&Banana::default(), &template, &rule, &seq).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ra, rb);
}

#[test]
fn unsupported_points_are_penalised() {
    // Half-line target: N(0,1) restricted to x > -0.5.
    let target = FnDensity::new(1, |x: &[f64]| if x[0] > -0.5 { -0.5 * x[0] * x[0] } else { f64::NEG_INFINITY });
    let map = MonotoneTriangularMap::identity(1, &MapTemplate::linear()).unwrap();
    let value = kl_objective(&map, &target, &gh(10, 1), Execution::Sequential).unwrap();
    assert!(value.flagged > 0);
    assert!(value.value.is_finite() && value.value >= 1e9 * 1e-6);
}

#[test]
fn regression_recovers_a_representable_map() {
    let template = MonotoneTriangularMap::identity(2, &MapTemplate::new(2)).unwrap();
    let mut truth = template.clone();
    let c: Vec<f64> = template.coefficients().iter().enumerate().map(|(i, v)| v + 0.1 * ((i as f64).sin())).collect();
    truth.set_coefficients(&c).unwrap();
    let rule = gh(8, 2);
    let opts = FitOptions { gradient_tolerance: 1e-10, ..FitOptions::default() };
    let fit = regress_map(|x: &[f64]| truth.evaluate(x), &template, &rule, &opts).unwrap();
    assert!(fit.residual < 1e-12, "{}", fit.residual);
    let x = [0.3, 1.1];
    let (a, b) = (fit.map.evaluate(&x).unwrap(), truth.evaluate(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-6));
}

#[test]
fn standard_normal_needs_no_transport() {
    // Affine maps keep the quadrature exact, so the identity is stationary.
    let template = MonotoneTriangularMap::identity(3, &MapTemplate::linear()).unwrap();
    let (_, report) = compute_map(&StandardNormal { dim: 3 }, &template, &gh(4, 3), &FitOptions::default()).unwrap();
    assert_eq!(report.iterations, 0, "{report:?}");
    assert!(report.variance_diagnostic < 1e-20);
}
