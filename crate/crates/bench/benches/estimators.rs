use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ebmod_core::builtins::{circle_unit, circle_weighted};
use ebmod_core::{modulus_formula, sandwich_report, Builtin, SamplingConfig, Scenario, Tolerances};

fn sandwich(c: &mut Criterion) {
    let tol = Tolerances::default();
    let cfg = SamplingConfig::default();
    let mut g = c.benchmark_group("sandwich_report");
    g.sample_size(10);
    for b in [
        Builtin::StuWar,
        Builtin::MaxQuadAffine,
        Builtin::CircleUnit,
        Builtin::CircleWeighted,
    ] {
        let s = Scenario::builtin(b).unwrap();
        g.bench_function(b.name(), |bench| {
            bench.iter(|| sandwich_report(black_box(&s), &cfg, &tol).unwrap())
        });
    }
    g.finish();
}

fn formula(c: &mut Criterion) {
    let tol = Tolerances::default();
    let x = [1.0, 0.0];
    let weighted = circle_weighted();
    let unit_grid = circle_unit().without_active_solver();
    c.bench_function("modulus_formula/circle-weighted", |b| {
        b.iter(|| modulus_formula(black_box(&weighted), &x, &tol).unwrap())
    });
    c.bench_function("modulus_formula/circle-unit-clustered", |b| {
        b.iter(|| modulus_formula(black_box(&unit_grid), &x, &tol).unwrap())
    });
}

criterion_group!(benches, sandwich, formula);
criterion_main!(benches);
