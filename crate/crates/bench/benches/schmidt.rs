use std::hint::black_box;

use biphoton::{decompose, parse, Backend, FrequencyGrid, PhysicalParams, Pipeline, Scheme, SchmidtOptions};
use biphoton_bench::fe_field;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn schmidt_backends(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    for points in [128, 256, 512] {
        let field = fe_field(points);
        for backend in [Backend::DirectSvd, Backend::KernelEigen] {
            group.bench_with_input(BenchmarkId::new(backend.name(), points), &field, |b, f| {
                b.iter(|| decompose(black_box(f), backend, &SchmidtOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn field_construction(c: &mut Criterion) {
    let grid = FrequencyGrid::new(150.0, 512).unwrap();
    let params = PhysicalParams::default();
    let mut group = c.benchmark_group("build");
    group.bench_function("preset_fe_512", |b| {
        b.iter(|| Scheme::Fe { gamma_c: 1.0 }.build(&params, black_box(&grid), &grid).unwrap())
    });
    let expr = Pipeline::Expr(Scheme::Fe { gamma_c: 1.0 }.canonical_expr());
    group.bench_function("expr_fe_512", |b| b.iter(|| expr.build(&params, black_box(&grid), &grid).unwrap()));
    group.finish();
}

fn parsing(c: &mut Criterion) {
    let text = Scheme::Iterated { stages: 6, gamma_c_i: 5.0, gamma_c_s: 5.0 }.canonical_expr();
    c.bench_function("parse_iterated_6", |b| b.iter(|| parse(black_box(&text)).unwrap()));
}

criterion_group!(benches, schmidt_backends, field_construction, parsing);
criterion_main!(benches);
