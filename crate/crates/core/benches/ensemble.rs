use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pbvqo::parallel::{map_indexed, Execution};
use pbvqo::simulator::EvolutionConfig;
use pbvqo::workflows::{run_pbvqo, PbvqoProblem, RunOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn energy_batch(c: &mut Criterion) {
    let evaluator = PbvqoProblem::ring(8).unwrap().evaluator().unwrap();
    let points: Vec<Vec<f64>> = (0..32)
        .map(|k| {
            let s = k as f64 * 0.1;
            vec![2.0 - s, 0.6 + s, 1.4, -0.1, -0.6 + s, -0.4]
        })
        .collect();
    let mut group = c.benchmark_group("energy_batch_n8");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| map_indexed(points.len(), mode, |k| evaluator.energy(black_box(&points[k])).unwrap()))
        });
    }
    group.finish();
}

fn restart_ensemble(c: &mut Criterion) {
    let problem = PbvqoProblem::ring(4)
        .unwrap()
        .with_evolution(EvolutionConfig::with_divisions(200))
        .unwrap();
    let mut group = c.benchmark_group("bfgs_restarts_n4");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mut options = RunOptions {
            execution: mode,
            ..RunOptions::default()
        };
        options.bfgs.max_iterations = 20;
        group.bench_with_input(BenchmarkId::from_parameter(name), &options, |b, options| {
            b.iter(|| run_pbvqo(&problem, 8, black_box(3), options).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, energy_batch, restart_ensemble);
criterion_main!(benches);
