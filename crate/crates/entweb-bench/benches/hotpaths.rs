//! Hot paths: the spectral routes behind every optimizer step, the
//! two-qubit concurrence, a small oracle sweep, and the pair trace that
//! dominates state-pipeline runs.

use criterion::{criterion_group, criterion_main, Criterion};
use entweb_core::optimizer::grid_oracle;
use entweb_core::qstate::dicke_state;
use entweb_core::sampling::{draw_feasible_params, draw_interior_point, sample_stream};
use entweb_core::symmetric_family::{lambdas, lambdas_from_invariants};
use entweb_core::wootters_concurrence;
use std::hint::black_box;

fn bench_spectral_routes(c: &mut Criterion) {
    let mut rng = sample_stream(42, 0);
    let cases: Vec<_> = (0..32)
        .map(|_| {
            let p = draw_feasible_params(6, &mut rng);
            let pt = draw_interior_point(&p, &mut rng, 0.05);
            (p, pt)
        })
        .collect();
    c.bench_function("lambdas_matrix_route_x32", |b| {
        b.iter(|| {
            for (p, pt) in &cases {
                black_box(lambdas(black_box(p), black_box(pt)).unwrap());
            }
        })
    });
    c.bench_function("lambdas_cubic_route_x32", |b| {
        b.iter(|| {
            for (p, pt) in &cases {
                black_box(lambdas_from_invariants(black_box(p), black_box(pt)).unwrap());
            }
        })
    });
}

fn bench_wootters(c: &mut Criterion) {
    let rho = dicke_state(6, 1).unwrap().pair_marginal(1, 2).unwrap();
    c.bench_function("wootters_concurrence", |b| {
        b.iter(|| black_box(wootters_concurrence(black_box(&rho)).unwrap()))
    });
}

fn bench_grid_oracle(c: &mut Criterion) {
    let mut rng = sample_stream(42, 1);
    let params = draw_feasible_params(5, &mut rng);
    c.bench_function("grid_oracle_res32", |b| {
        b.iter(|| black_box(grid_oracle(black_box(&params), 32).unwrap()))
    });
}

fn bench_pair_trace(c: &mut Criterion) {
    let st = dicke_state(8, 1).unwrap();
    c.bench_function("pair_marginal_dicke8", |b| {
        b.iter(|| black_box(st.pair_marginal(black_box(3), black_box(6)).unwrap()))
    });
}

criterion_group!(
    hotpaths,
    bench_spectral_routes,
    bench_wootters,
    bench_grid_oracle,
    bench_pair_trace
);
criterion_main!(hotpaths);
