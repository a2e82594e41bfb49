use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use lambda_lookdown::estimation::{estimate_explosion_time, estimate_fixation_time};
use lambda_lookdown::lambda::{LambdaSpec, ModelParams, SimplexPoint};
use lambda_lookdown::parallel::Execution;
use lambda_lookdown::rng::StreamSeed;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kingman_fixation(c: &mut Criterion) {
    let params = ModelParams::neutral(2, LambdaSpec::kingman(1.0).unwrap()).unwrap();
    let x = SimplexPoint::new(vec![0.2, 0.3]).unwrap();
    let seed = StreamSeed::new(1, "bench-fixation");
    let reps = 10_000;
    let mut group = c.benchmark_group("kingman_fixation");
    group.throughput(Throughput::Elements(reps));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_fixation_time(&params, &x, 1, black_box(reps), None, &seed, exec).unwrap())
        });
    }
    group.finish();
}

fn beta_explosion(c: &mut Criterion) {
    let params = ModelParams::neutral(1, LambdaSpec::beta(1.5).unwrap()).unwrap();
    let seed = StreamSeed::new(1, "bench-explosion");
    let reps = 200;
    let mut group = c.benchmark_group("beta_explosion");
    group.sample_size(10);
    group.throughput(Throughput::Elements(reps));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_explosion_time(&params, 1, black_box(reps), Some(10_000), &seed, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kingman_fixation, beta_explosion);
criterion_main!(benches);
