use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use peclet::mixing::HminusOne;
use peclet::semigroup::{operator_norm, CnStepper};
use peclet::spectra::resolvent_norm;
use peclet::stochastic::{covariance_block, CovarianceOptions, NoiseSpectrum};
use peclet::{
    assemble_mode_operator, make_profile, smooth_random_vector, Domain, Kind, ModeOperator,
    ProfileSpec,
};

fn operator(n: usize, nu: f64) -> ModeOperator {
    let p = Arc::new(make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, n).unwrap());
    assemble_mode_operator(p, nu, 1, Kind::Elliptic).unwrap()
}

fn cn_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("cn_step");
    for n in [256, 1024, 4096] {
        let op = operator(n, 1e-4);
        let mut stepper = CnStepper::new(&op.matrix, 0.05).unwrap();
        let mut f = smooth_random_vector(&op.grid, 8, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| stepper.step(black_box(&mut f)))
        });
    }
    g.finish();
}

fn norms(c: &mut Criterion) {
    let op = operator(256, 1e-3);
    c.bench_function("operator_norm_t10_n256", |b| {
        b.iter(|| operator_norm(black_box(&op), 10.0, 0.05, 1e-6).unwrap())
    });
    c.bench_function("resolvent_norm_n256", |b| {
        b.iter(|| resolvent_norm(black_box(&op), -0.5).unwrap())
    });
    let h = HminusOne::new(4096);
    let f = smooth_random_vector(&operator(4096, 1e-3).grid, 32, 2);
    c.bench_function("hminus1_norm_n4096", |b| b.iter(|| h.norm(black_box(&f))));
}

fn covariance(c: &mut Criterion) {
    let p = Arc::new(make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, 64).unwrap());
    let noise = NoiseSpectrum::rational(2, 4, true);
    let opts = CovarianceOptions {
        richardson: false,
        ..Default::default()
    };
    let mut g = c.benchmark_group("covariance_block");
    g.sample_size(10);
    g.bench_function("n64_nu0.1", |b| {
        b.iter(|| covariance_block(p.clone(), &noise, 0.1, 1.0, 1, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, cn_step, norms, covariance);
criterion_main!(benches);
