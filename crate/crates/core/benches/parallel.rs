//! Parallel against sequential evaluation of the KL objective and of
//! smoothing samples. Both paths return bit-identical results.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lowdim::models::{simulate, Banana, StochasticVolatility};
use lowdim::parallel::Execution;
use lowdim::sequential::{assimilate, sample_smoothing, AssimilationOptions};
use lowdim::transport::{MapTemplate, MonotoneTriangularMap};
use lowdim::variational::{kl_objective, ReferenceRule, RuleKind};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn objective(c: &mut Criterion) {
    let map = MonotoneTriangularMap::identity(2, &MapTemplate::new(3)).unwrap();
    let rule = ReferenceRule::new(RuleKind::MonteCarlo { points: 20_000, seed: 1 }, 2).unwrap();
    let target = Banana::default();
    let mut group = c.benchmark_group("kl_objective");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kl_objective(&map, &target, &rule, exec).unwrap().value)
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let model = StochasticVolatility::fixed(0.3, 3.0);
    let obs = simulate(&model, 12, None, 1).unwrap().observations;
    let state = assimilate(&model, &obs, &AssimilationOptions::new(MapTemplate::new(2))).unwrap();
    let mut group = c.benchmark_group("sample_smoothing");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_smoothing(&state, 10_000, 3, exec).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, objective, sampling);
criterion_main!(benches);
