use criterion::{criterion_group, criterion_main, Criterion};
use pi_core::fuchsian::{Construction, Generator};
use pi_core::index::{self, ResolverRequest};
use pi_core::linalg::c;
use pi_core::monodromy::{monodromy, symbol_from_system};
use pi_core::ode::IntegratorConfig;
use pi_core::resolver::{planted_target, resolve};
use pi_core::symbol::extract_data;
use std::hint::black_box;

fn bench(cr: &mut Criterion) {
    let cfg = IntegratorConfig::default();
    let mut g = Generator::new(1);
    let (tri, _) = g.construct_triangular_2(3, &[1, 0]).unwrap();
    let (flag, p) = g.construct_3x3(Construction::Flag).unwrap();

    cr.bench_function("monodromy 2x2 three points", |b| b.iter(|| monodromy(black_box(&tri), &cfg).unwrap()));
    cr.bench_function("monodromy 3x3 flag", |b| b.iter(|| monodromy(black_box(&flag), &cfg).unwrap()));

    let sym = symbol_from_system(&flag, p, &cfg).unwrap();
    cr.bench_function("classify and index 3x3 symbol", |b| {
        b.iter(|| {
            let data = extract_data(black_box(&sym)).unwrap();
            let rep = index::classify(&data).unwrap();
            index::indices(&rep, &data).unwrap()
        })
    });

    let points = g.singularities(4);
    let exponents = g.generic_exponents(4, 2, 2, 0.25);
    let target = planted_target(2, &points, &exponents, c(0.3, 0.1), &cfg).unwrap();
    let request = ResolverRequest {
        n: 2,
        m: 4,
        kappa: 0,
        target,
        exponents,
        singularities: points,
        balanced: vec![0, 0],
        extremal: vec![1, -1],
        scan_radius: index::DEFAULT_SCAN_RADIUS,
        grid: 11,
        match_tol: index::DEFAULT_MATCH_TOL,
    };
    let mut group = cr.benchmark_group("resolver");
    group.sample_size(10);
    group.bench_function("accessory scan 11x11", |b| b.iter(|| resolve(black_box(&request), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
