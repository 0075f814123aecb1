//! Batch explain throughput, sequential pool vs all cores.
//!
//! The batch is a fixed set of factuals against one linear separator, so the
//! two arms do identical numeric work and differ only in scheduling.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scfe_core::classifier::{Activation, ClassifierModel, Layer};
use scfe_core::exec::ordered_map;
use scfe_core::numerics::{Matrix, Rng, Vector};
use scfe_core::plausibility::BoundTerm;
use scfe_core::proximal::{BoxBounds, PenaltyNorm, SparsityMode};
use scfe_core::solver::{apg_solve, SolverConfig};

fn world(dim: usize, n: usize) -> (ClassifierModel, BoxBounds, Vec<Vector>) {
    let mut rng = Rng::new(0xbe9c);
    let weights: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let layer = Layer {
        weights: Matrix::from_data(1, dim, weights).unwrap(),
        bias: vec![0.0],
        activation: Activation::Identity,
    };
    let model = ClassifierModel::new(vec![layer]).unwrap();
    let bounds = BoxBounds::new(vec![0.0; dim], vec![1.0; dim]).unwrap();
    let factuals = (0..n)
        .map(|_| (0..dim).map(|_| rng.uniform()).collect())
        .collect();
    (model, bounds, factuals)
}

fn solve_batch(
    jobs: usize,
    model: &ClassifierModel,
    bounds: &BoxBounds,
    factuals: &[Vector],
    config: &SolverConfig,
) -> f64 {
    let results = ordered_map(jobs, factuals, |x_f| {
        apg_solve(x_f, 1, model, &BoundTerm::None, bounds, config).unwrap()
    })
    .unwrap();
    results.iter().map(|r| r.theta2).sum()
}

fn bench_batch(c: &mut Criterion) {
    let (model, bounds, factuals) = world(16, 64);
    let config = SolverConfig {
        gamma: 4.0,
        sparsity: SparsityMode::Penalty {
            p: PenaltyNorm::L1,
            beta: 0.05,
        },
        cutoff: 0.05,
        ..SolverConfig::default()
    };
    let mut group = c.benchmark_group("batch_solve");
    for &jobs in &[1usize, 0] {
        let label = if jobs == 1 { "sequential" } else { "all_cores" };
        group.bench_with_input(BenchmarkId::from_parameter(label), &jobs, |b, &jobs| {
            b.iter(|| solve_batch(jobs, &model, &bounds, &factuals, &config));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
