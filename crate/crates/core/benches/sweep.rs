use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chowliu::estimators::{pairwise_mi_matrix_with, EstimatorMode};
use chowliu::exec::Execution;
use chowliu::harness::{preset, run_sweep_with};
use chowliu::model::{sample_tree_dataset, Boundedness};
use chowliu::rng::rng_from_seed;
use chowliu::tree::{assign_edge_weights, generate_random_tree};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for name in ["star", "case1"] {
        let cfg = preset(name).unwrap().with_trials(100).with_sample_sizes(vec![1000]);
        for (label, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, label), &exec, |b, &exec| {
                b.iter(|| black_box(run_sweep_with(&cfg, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn pairwise(c: &mut Criterion) {
    let mut rng = rng_from_seed(1);
    let tree = assign_edge_weights(generate_random_tree(40, &mut rng).unwrap(), 0.1, 0.9, &mut rng).unwrap();
    let data = sample_tree_dataset(&tree, 20_000, Boundedness::Unbounded, &mut rng).unwrap();
    let mut group = c.benchmark_group("pairwise_mi_d40_n20000");
    for (label, exec) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| black_box(pairwise_mi_matrix_with(&data, EstimatorMode::Continuous, None, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps, pairwise);
criterion_main!(benches);
