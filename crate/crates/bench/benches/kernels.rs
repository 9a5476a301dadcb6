use std::hint::black_box;

use confgauss::chart::chart_jet;
use confgauss::energy::functional_set;
use confgauss::jet::Jet;
use confgauss::suite::pointwise_suite;
use confgauss::variational::{ey_field, BTermSign, ElJets};
use confgauss_bench::perturbed_torus;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet_mul");
    for order in [2, 4, 6] {
        let a = Jet::variable(0.3, 0, order).sin() * &Jet::variable(0.7, 2, order).exp();
        let b = Jet::variable(1.1, 1, order).cos() + Jet::variable(0.2, 3, order);
        g.bench_with_input(BenchmarkId::from_parameter(order), &order, |bch, _| bch.iter(|| black_box(&a) * black_box(&b)));
    }
    g.finish();
}

fn charts(c: &mut Criterion) {
    let (atlas, pts) = perturbed_torus(1);
    let (ci, u) = pts[0];
    let mut g = c.benchmark_group("chart_jet");
    for order in [2, 4, 6] {
        g.bench_with_input(BenchmarkId::from_parameter(order), &order, |bch, &o| {
            bch.iter(|| chart_jet(&atlas.charts[ci], black_box(u), o).unwrap())
        });
    }
    g.finish();
}

fn pointwise(c: &mut Criterion) {
    let (atlas, pts) = perturbed_torus(10);
    c.bench_function("pointwise_suite_10", |b| b.iter(|| pointwise_suite(&atlas, black_box(&pts)).unwrap()));
    let (ci, u) = pts[0];
    let ch = &atlas.charts[ci];
    let el = ElJets::new(&chart_jet(ch, u, 6).unwrap(), ch.orientation).unwrap();
    c.bench_function("ey_field", |b| b.iter(|| ey_field(black_box(&el), BTermSign::Signed).unwrap()));
}

fn integrals(c: &mut Criterion) {
    let (atlas, _) = perturbed_torus(0);
    let mut g = c.benchmark_group("functional_set");
    g.sample_size(10);
    g.bench_function("level0", |b| b.iter(|| functional_set(black_box(&atlas), 0, false).unwrap()));
    g.finish();
}

criterion_group!(benches, jets, charts, pointwise, integrals);
criterion_main!(benches);
