use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use fphi_bench::{noise_field, sd};
use fphi_core::besov::{besov_norm_dyadic, default_j_max, BesovParams};
use fphi_core::calculus::paraproduct;
use fphi_core::grid::TGrid;
use fphi_core::{build_space, catalog_lookup, decompose};

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    for level in [3u32, 4] {
        let graph = build_space(&catalog_lookup("sg").unwrap(), level).unwrap();
        group.bench_function(format!("sg_level{level}"), |b| {
            let g = Arc::new(
                build_space(&catalog_lookup("sg").unwrap(), level).unwrap(),
            );
            b.iter_batched(
                || g.clone(),
                |g| black_box(decompose(g).unwrap()),
                BatchSize::LargeInput,
            )
        });
        drop(graph);
    }
    group.finish();
}

fn bench_semigroup_apply(c: &mut Criterion) {
    let dense = sd("sg", 4);
    let kron = sd("torus2d", 5);
    let fd = noise_field(&dense, 1);
    let fk = noise_field(&kron, 1);
    let mut group = c.benchmark_group("semigroup_apply");
    group.bench_function("dense_sg4", |b| {
        b.iter(|| black_box(dense.apply_multiplier(&fd, |lam| (-0.1 * lam).exp())))
    });
    group.bench_function("kron_torus32", |b| {
        b.iter(|| black_box(kron.apply_multiplier(&fk, |lam| (-0.1 * lam).exp())))
    });
    group.finish();
}

fn bench_besov_norm(c: &mut Criterion) {
    let s = sd("sg", 3);
    let f = noise_field(&s, 2);
    let params = BesovParams::sup(0.5, 2);
    let j_max = default_j_max(s.graph());
    c.bench_function("besov_dyadic_sg3", |b| {
        b.iter(|| black_box(besov_norm_dyadic(&s, &f, &params, j_max).unwrap()))
    });
}

fn bench_paraproduct(c: &mut Criterion) {
    let s = sd("sg", 2);
    let f = s.apply_multiplier(&noise_field(&s, 3), |lam| (-0.02 * lam).exp());
    let g = s.apply_multiplier(&noise_field(&s, 4), |lam| (-0.02 * lam).exp());
    let grid = TGrid::gauss_log(1e-6, 1.0, 32).unwrap();
    c.bench_function("paraproduct_sg2_128pt", |b| {
        b.iter(|| black_box(paraproduct(&s, &f, &g, 2, &grid).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_decompose,
    bench_semigroup_apply,
    bench_besov_norm,
    bench_paraproduct
);
criterion_main!(benches);
