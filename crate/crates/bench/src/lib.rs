//! Seeded inputs for the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ebmod_core::PointSet;

/// `m` points in dimension `n` with coordinates uniform in `[-1, 1]`, shifted
/// by `offset` along the first axis.
pub fn random_points(seed: u64, n: usize, m: usize, offset: f64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            p[0] += offset;
            p
        })
        .collect();
    PointSet::from_rows(&rows).expect("finite points")
}

/// `m` points on the unit circle, shifted away from the origin so every
/// point is exposed.
pub fn circle_points(m: usize, offset: f64) -> PointSet {
    let rows: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / m as f64;
            [offset + t.cos(), t.sin()]
        })
        .collect();
    PointSet::from_rows(&rows).expect("finite points")
}
