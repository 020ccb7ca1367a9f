use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tvrecover::harness::phantom;
use tvrecover::image::{discrete_gradient, gradient_adjoint, tv_norm, TvMode};
use tvrecover::operators::{fourier_signed_op, gaussian_op, MeasurementOp};
use tvrecover::{haar_forward, haar_inverse};

fn haar(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar");
    for n in [64, 256] {
        let x = phantom(n).unwrap();
        let coeffs = haar_forward(&x).unwrap();
        g.bench_with_input(BenchmarkId::new("forward", n), &x, |b, x| b.iter(|| haar_forward(black_box(x)).unwrap()));
        g.bench_with_input(BenchmarkId::new("inverse", n), &coeffs, |b, c| b.iter(|| haar_inverse(black_box(c))));
    }
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient");
    for n in [64, 256] {
        let x = phantom(n).unwrap();
        let field = discrete_gradient(&x).unwrap();
        g.bench_with_input(BenchmarkId::new("forward", n), &x, |b, x| b.iter(|| discrete_gradient(black_box(x)).unwrap()));
        g.bench_with_input(BenchmarkId::new("adjoint", n), &field, |b, f| b.iter(|| gradient_adjoint(black_box(f))));
        g.bench_with_input(BenchmarkId::new("tv_isotropic", n), &x, |b, x| b.iter(|| tv_norm(black_box(x), TvMode::Isotropic)));
    }
    g.finish();
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("operators");
    for n in [64, 256] {
        let x = phantom(n).unwrap();
        let op = fourier_signed_op(n * n / 5, n, 1).unwrap();
        let y = op.apply_real(&x);
        g.bench_with_input(BenchmarkId::new("fourier_apply", n), &x, |b, x| b.iter(|| op.apply_real(black_box(x))));
        g.bench_with_input(BenchmarkId::new("fourier_adjoint", n), &y, |b, y| b.iter(|| op.adjoint_real(black_box(y))));
    }
    let x = phantom(32).unwrap();
    let op = gaussian_op(300, 32, 32, 1).unwrap();
    g.bench_function("gaussian_apply/32", |b| b.iter(|| op.apply_real(black_box(&x))));
    g.finish();
}

criterion_group!(benches, haar, gradient, operators);
criterion_main!(benches);
