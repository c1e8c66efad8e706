//! Construction costs: complexes and posets from a frame family, the
//! closure operator, and the pairwise frame-extension check.

use cbpd_bench::{subspace_instance, uniform_instance};
use cbpd_core::{build_cb, build_pd, check_ep, closure, ElementSet};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build");
    for (name, (p, family)) in [
        ("gf(2)^3", subspace_instance(2, 3)),
        ("u(5,3)", uniform_instance(5, 3)),
    ] {
        group.bench_function(format!("cb/{name}"), |b| {
            b.iter(|| build_cb(black_box(&p), black_box(&family)))
        });
        group.bench_function(format!("pd/{name}"), |b| {
            b.iter(|| build_pd(black_box(&p), black_box(&family)))
        });
    }
    group.finish();
}

fn bench_order_complex(c: &mut Criterion) {
    let (p, family) = subspace_instance(2, 3);
    let pd = build_pd(&p, &family);
    c.bench_function("order_complex/pd gf(2)^3", |b| {
        b.iter(|| black_box(&pd).order_complex())
    });
}

fn bench_closure(c: &mut Criterion) {
    let (p, _family) = subspace_instance(2, 3);
    let singletons: Vec<ElementSet> = (0..p.len()).map(ElementSet::singleton).collect();
    c.bench_function("closure/singletons gf(2)^3", |b| {
        b.iter(|| {
            for s in &singletons {
                black_box(closure(black_box(&p), s));
            }
        })
    });
}

fn bench_check_ep(c: &mut Criterion) {
    let (p, family) = subspace_instance(2, 3);
    let pd = build_pd(&p, &family);
    c.bench_function("check_ep/gf(2)^3", |b| {
        b.iter(|| check_ep(black_box(&family), black_box(&pd)))
    });
}

criterion_group!(
    benches,
    bench_build,
    bench_order_complex,
    bench_closure,
    bench_check_ep
);
criterion_main!(benches);
