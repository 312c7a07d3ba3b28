use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iafeas::exact::{default_h, exact_rank, exact_theta};
use iafeas::feasibility::build_theta_matrix;
use iafeas::inverse_ia::{canonical_triple, generic_triple};
use iafeas::{feasibility_test, RandomSeed};
use iafeas_bench::{scenario, SCENARIOS};

fn theta(c: &mut Criterion) {
    let mut g = c.benchmark_group("theta_build");
    for text in SCENARIOS {
        let s = scenario(text);
        let t = generic_triple(&s, RandomSeed(1));
        g.bench_with_input(BenchmarkId::from_parameter(text), &t, |b, t| {
            b.iter(|| build_theta_matrix(black_box(&s), black_box(t)).unwrap())
        });
    }
    g.finish();
}

fn float_test(c: &mut Criterion) {
    let mut g = c.benchmark_group("feasibility_test");
    g.sample_size(10);
    for text in SCENARIOS {
        let s = scenario(text);
        g.bench_function(BenchmarkId::from_parameter(text), |b| {
            b.iter(|| feasibility_test(black_box(&s), RandomSeed(1), 3).unwrap())
        });
    }
    g.finish();
}

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_rank");
    g.sample_size(10);
    for text in &SCENARIOS[..3] {
        let s = scenario(text);
        let t = canonical_triple(&s, &default_h(), RandomSeed(1)).unwrap();
        let rows = exact_theta(&s, &t).to_integer_rows();
        g.bench_with_input(BenchmarkId::from_parameter(text), &rows, |b, rows| {
            b.iter(|| exact_rank(black_box(rows)))
        });
    }
    g.finish();
}

criterion_group!(benches, theta, float_test, exact);
criterion_main!(benches);
