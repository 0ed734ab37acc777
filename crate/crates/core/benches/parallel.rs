//! Default rayon pool against a single-thread pool on the data-parallel hot
//! paths. Build with `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use ncamon::baselines::{fit_pca, gram_matrix};
use ncamon::dataset::{apply_scaler, fit_scaler, generate_synthetic};
use ncamon::encoder::{default_encoder_dims, init_encoder, loss_gradients};
use ncamon::{DataMatrix, DimSpec, FaultSpec, FitSettings, Method, ModelEnvelope};
use rayon::ThreadPool;

fn pools() -> Vec<(String, ThreadPool)> {
    let build = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool");
    let all = rayon::current_num_threads();
    let mut out = vec![("sequential".to_string(), build(1))];
    if all > 1 {
        out.push((format!("parallel-{all}"), build(all)));
    } else {
        eprintln!("only one hardware thread available; skipping the parallel pool");
    }
    out
}

fn scaled(n_vars: usize, rows: usize) -> (DataMatrix, DataMatrix) {
    let (train, test) = generate_synthetic(n_vars, rows, 960, &FaultSpec::step(4.0, 160), 42).expect("synthetic data");
    let scaler = fit_scaler(&train).expect("scaler");
    (apply_scaler(&scaler, &train).expect("scaled train"), test.data)
}

fn bench_gram(c: &mut Criterion) {
    let (x, _) = scaled(20, 800);
    let mut group = c.benchmark_group("gram_matrix_800x20");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| gram_matrix(x.values(), 200.0)))
        });
    }
    group.finish();
}

fn bench_gradients(c: &mut Criterion) {
    let (x, _) = scaled(20, 2000);
    let enc = init_encoder(&default_encoder_dims(20, 6), 1).expect("encoder");
    let b: DMatrix<f64> = fit_pca(&x, 6).expect("pca").loadings;
    let mut group = c.benchmark_group("nca_loss_gradients_2000x20");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |bench| {
            pool.install(|| bench.iter(|| loss_gradients(&enc, &x, &b).expect("gradients")))
        });
    }
    group.finish();
}

fn bench_monitor(c: &mut Criterion) {
    let (train, _) = generate_synthetic(20, 500, 960, &FaultSpec::step(4.0, 160), 42).expect("synthetic data");
    let (_, test) = scaled(20, 500);
    let model = ModelEnvelope::train(Method::Kpca, &train, DimSpec::Fixed(4), &FitSettings::default(), 0.99).expect("model");
    let mut group = c.benchmark_group("kpca_monitor_960x20");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| model.monitor(&test).expect("records")))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gram, bench_gradients, bench_monitor);
criterion_main!(benches);
