//! Built-in models: analytic gradients and conditional-independence structure.

use lowdim::graph::{pairwise_imap, ImapOptions, UndirectedGraph};
use lowdim::models::{simulate, LinearGaussianSsm, StochasticVolatility};
use lowdim::sequential::JointPosterior;
use lowdim::transport::{finite_difference_gradient, LogDensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_gradient(d: &dyn LogDensity, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let x: Vec<f64> = (0..d.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let exact = d.gradient(&x).expect("analytic gradient");
        let approx = finite_difference_gradient(d, &x);
        for (a, b) in exact.iter().zip(&approx) {
            assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{exact:?} vs {approx:?}");
        }
    }
}

#[test]
fn joint_gradients_match_differences() {
    let sv = StochasticVolatility::estimated();
    let obs = simulate(&sv, 6, Some(&[0.3, 3.0]), 1).unwrap().observations;
    check_gradient(&JointPosterior::new(&sv, &obs), 2);

    let fixed = StochasticVolatility::fixed(-0.2, 2.0);
    check_gradient(&JointPosterior::new(&fixed, &obs), 3);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lg = LinearGaussianSsm::random_stable(3, 2, &mut rng);
    let obs = simulate(&lg, 5, None, 5).unwrap().observations;
    check_gradient(&JointPosterior::new(&lg, &obs), 6);
}

#[test]
fn volatility_posterior_graph_is_parameters_plus_chain() {
    let len = 6;
    let sv = StochasticVolatility::estimated();
    let obs = simulate(&sv, len, Some(&[0.3, 3.0]), 11).unwrap().observations;
    let joint = JointPosterior::new(&sv, &obs);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let probes: Vec<Vec<f64>> = (0..5).map(|_| (0..2 + len).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let opts = ImapOptions { relative_tolerance: 1e-4, ..ImapOptions::default() };
    let found = pairwise_imap(&joint, &probes, &opts).unwrap();
    let mut want = UndirectedGraph::new(2 + len);
    want.add_edge(0, 1).unwrap();
    for k in 0..len {
        want.add_edge(0, 2 + k).unwrap();
        want.add_edge(1, 2 + k).unwrap();
        if k > 0 {
            want.add_edge(1 + k, 2 + k).unwrap();
        }
    }
    assert_eq!(found, want);
}

#[test]
fn linear_gaussian_config_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lg = LinearGaussianSsm::random_stable(2, 1, &mut rng);
    let text = serde_json::to_string(&lg).unwrap();
    let back: LinearGaussianSsm = serde_json::from_str(&text).unwrap();
    assert_eq!(back.f(), lg.f());
    assert_eq!(back.cov0(), lg.cov0());
}
