//! Benchmarks for the hot paths: empirical backups, the three fitting
//! operators, and the replacement-problem grid oracle.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use evl_core::env::{replacement_model, replacement_oracle, ReplacementParams};
use evl_core::fit::{fit_polynomial, fit_rkhs, fit_rpbf};
use evl_core::mdp::{sample_backups, SampledBackup};
use evl_core::{substream, Kernel, MuSampler, RpbfFamily, ValueFn};

fn backup_data(n: usize) -> SampledBackup {
    let model = replacement_model(&ReplacementParams::default());
    let mu = MuSampler::uniform_over(&model);
    sample_backups(
        &model,
        &ValueFn::constant(50.0),
        &|rng| mu.sample(rng),
        n,
        5,
        7,
        0,
    )
    .unwrap()
}

fn bench_backups(c: &mut Criterion) {
    let model = replacement_model(&ReplacementParams::default());
    let mu = MuSampler::uniform_over(&model);
    let v = ValueFn::constant(50.0);
    c.bench_function("sample_backups n100 m5", |b| {
        b.iter(|| sample_backups(&model, &v, &|rng| mu.sample(rng), 100, 5, 7, 0).unwrap())
    });
}

fn bench_fit_rpbf(c: &mut Criterion) {
    let data = backup_data(100);
    let family = RpbfFamily::Fourier { dim: 1, omega_std: 0.1 };
    let thetas = family.sample(5, &mut substream(7, &[1]));
    c.bench_function("fit_rpbf n100 j5", |b| {
        b.iter_batched(
            || data.clone(),
            |d| fit_rpbf(&thetas, &d, 600.0, Some(100.0)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_fit_rkhs(c: &mut Criterion) {
    let data = backup_data(100);
    c.bench_function("fit_rkhs n100", |b| {
        b.iter_batched(
            || data.clone(),
            |d| fit_rkhs(Kernel::Gaussian { inv_sq_bandwidth: 0.01 }, 1e-2, &d, Some(100.0))
                .unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_fit_polynomial(c: &mut Criterion) {
    let data = backup_data(100);
    c.bench_function("fit_polynomial n100 d4", |b| {
        b.iter_batched(
            || data.clone(),
            |d| fit_polynomial(4, &d, Some(100.0)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("replacement_oracle grid500", |b| {
        b.iter(|| replacement_oracle(&ReplacementParams::default(), 500, 1e-3).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_backups,
    bench_fit_rpbf,
    bench_fit_rkhs,
    bench_fit_polynomial,
    bench_oracle
);
criterion_main!(benches);
