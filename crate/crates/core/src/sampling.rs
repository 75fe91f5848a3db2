//! Shell radii, unit-direction sets and a golden-section maximizer shared by
//! the sampled estimators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{norm, Vector};

/// Geometric shells `r0 * beta^j`, `j < count`, around a base point, and the
/// direction set used on every shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub r0: f64,
    pub beta: f64,
    pub shells: usize,
    pub directions: usize,
    /// Seeded random directions added on top of the deterministic set.
    pub random_extra: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            r0: 1e-2,
            beta: 0.3,
            shells: 10,
            directions: 256,
            random_extra: 16,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(Error::input("shell radius r0 must be positive"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::input("shell ratio beta must lie in (0, 1)"));
        }
        if self.shells == 0 || self.directions == 0 {
            return Err(Error::input("need at least one shell and one direction"));
        }
        Ok(())
    }

    /// Shell radii, strictly decreasing.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.shells)
            .map(|j| self.r0 * self.beta.powi(j as i32))
            .collect()
    }

    /// Number of innermost shells used by the persistence / liminf windows.
    pub fn tail_len(&self) -> usize {
        tail_len(self.shells)
    }

    pub fn unit_directions(&self, dim: usize) -> Vec<Vector> {
        unit_directions(dim, self.directions, self.random_extra, self.seed)
    }
}

/// `ceil(m / 3)`
pub fn tail_len(m: usize) -> usize {
    m.div_ceil(3)
}

/// Deterministic low-discrepancy unit directions plus `extra` seeded random ones.
///
/// * `dim == 1`: `{+1, -1}` (the extras are redundant).
/// * `dim == 2`: `k` equally spaced angles starting at 0.
/// * `dim >= 3`: coordinate axes, pairwise diagonals, then Halton points
///   pushed onto the sphere until `k` directions are present.
pub fn unit_directions(dim: usize, k: usize, extra: usize, seed: u64) -> Vec<Vector> {
    assert!(dim > 0);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            return vec![
                Vector::from_vec_unchecked(vec![1.0]),
                Vector::from_vec_unchecked(vec![-1.0]),
            ]
        }
        2 => {
            for j in 0..k {
                let th = std::f64::consts::TAU * j as f64 / k as f64;
                dirs.push(vec![th.cos(), th.sin()]);
            }
        }
        _ => {
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; dim];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            let h = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..dim {
                for j in (i + 1)..dim {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut e = vec![0.0; dim];
                        e[i] = si * h;
                        e[j] = sj * h;
                        dirs.push(e);
                    }
                }
            }
            let mut idx = 1u64;
            while dirs.len() < k {
                let p: Vec<f64> = (0..dim)
                    .map(|d| 2.0 * halton(idx, PRIMES[d % PRIMES.len()]) - 1.0)
                    .collect();
                idx += 1;
                let nrm = norm(&p);
                if nrm > 1e-3 {
                    dirs.push(p.iter().map(|v| v / nrm).collect());
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = 0;
    while added < extra {
        let p: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nrm = norm(&p);
        if nrm > 1e-6 {
            dirs.push(p.iter().map(|v| v / nrm).collect());
            added += 1;
        }
    }
    dirs.into_iter().map(Vector::from_vec_unchecked).collect()
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Maximizes `f` on `[lo, hi]` by golden-section search; returns `(t, f(t))`
/// for the best point seen, endpoints included.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh > best.1 {
        best = (hi, fh);
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (t, v);
            }
        }
    }
    best
}
