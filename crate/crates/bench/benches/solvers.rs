use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ebmod_bench::{circle_points, random_points};
use ebmod_core::{end_set_distance, face_collection, min_norm_point, FaceMode, Tolerances};

fn min_norm(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut g = c.benchmark_group("min_norm_point");
    for &(n, m) in &[(2, 6), (4, 6), (8, 32), (16, 128)] {
        let a = random_points(1, n, m, 1.5);
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{m}")),
            &a,
            |b, a| b.iter(|| min_norm_point(black_box(a), &tol).unwrap()),
        );
    }
    g.finish();
}

fn faces(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut g = c.benchmark_group("face_collection");
    g.sample_size(20);
    for m in [6, 9, 12] {
        let a = circle_points(m, 2.0);
        g.bench_with_input(BenchmarkId::new("enumerate", m), &a, |b, a| {
            b.iter(|| face_collection(black_box(a), FaceMode::Enumerate, &tol).unwrap())
        });
    }
    let big = circle_points(64, 2.0);
    g.bench_function("sample/64", |b| {
        b.iter(|| {
            end_set_distance(
                black_box(&big),
                FaceMode::Sample {
                    directions: 1024,
                    seed: 0,
                },
                &tol,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, min_norm, faces);
criterion_main!(benches);
