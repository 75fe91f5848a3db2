//! Wolfe's algorithm for the point of minimum norm in the convex hull of a
//! finite point set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, PointSet, Tolerances, Vector};

const MAX_MAJOR: usize = 1_000;
const MAX_MINOR: usize = 1_000;

/// Nearest point of `co A` to the origin, with its convex weights over `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub point: Vector,
    pub distance: f64,
    /// One weight per point of the input set, in input order.
    pub weights: Vec<f64>,
}

impl MinNormResult {
    /// Largest violation of the optimality condition `<x, a_i - x> >= 0`.
    pub fn wolfe_gap(&self, a: &PointSet) -> f64 {
        let xx = dot(&self.point, &self.point);
        a.iter()
            .map(|p| xx - self.point.dot(p))
            .fold(0.0_f64, f64::max)
    }

    /// Checks the stored weights, point and distance against each other and
    /// the Wolfe optimality condition.
    pub fn certify(&self, a: &PointSet, tol: &Tolerances) -> bool {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| w < -tol.eq_tol) || (sum - 1.0).abs() > tol.eq_tol {
            return false;
        }
        let combo = combination(a, &self.weights);
        let scale = 1.0 + a.iter().map(|p| p.norm()).fold(0.0_f64, f64::max);
        if combo
            .iter()
            .zip(self.point.iter())
            .any(|(c, p)| (c - p).abs() > tol.eq_tol * scale)
        {
            return false;
        }
        if (self.point.norm() - self.distance).abs() > tol.eq_tol * scale {
            return false;
        }
        self.wolfe_gap(a) <= tol.dist_tol
    }
}

fn combination(a: &PointSet, weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; a.dim()];
    for (p, &w) in a.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(p.iter()) {
            *xi += w * pi;
        }
    }
    x
}

/// Affine minimizer of `||sum mu_i a_i||` subject to `sum mu_i = 1` over the
/// points in `corral`. Uses an SVD solve so affinely dependent corrals do not
/// break down.
fn affine_minimizer(a: &PointSet, corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (r, &i) in corral.iter().enumerate() {
        for (c, &j) in corral.iter().enumerate() {
            kkt[(r, c)] = a.get(i).dot(a.get(j));
        }
        kkt[(r, k)] = 1.0;
        kkt[(k, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let scale = kkt.amax().max(1.0);
    let svd = kkt.svd(true, true);
    match svd.solve(&rhs, 1e-13 * scale) {
        Ok(sol) => sol.iter().take(k).copied().collect(),
        Err(_) => vec![1.0 / k as f64; k],
    }
}

/// Minimum-norm point of `co A` by Wolfe's algorithm.
///
/// Terminates when `min_i <x, a_i> >= ||x||^2 - eps`, with `eps` a tiny
/// multiple of the largest squared norm in `A`.
pub fn min_norm_point(a: &PointSet, tol: &Tolerances) -> Result<MinNormResult> {
    let n = a.len();
    let max_sq = a.iter().map(|p| dot(p, p)).fold(0.0_f64, f64::max);
    let eps = 1e-14 * max_sq.max(1e-300);

    let start = (0..n)
        .min_by(|&i, &j| a.get(i).norm().total_cmp(&a.get(j).norm()))
        .expect("point sets are nonempty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = a.get(start).as_slice().to_vec();

    for _ in 0..MAX_MAJOR {
        let xx = dot(&x, &x);
        if xx <= eps {
            break;
        }
        let (j, best) = (0..n)
            .map(|i| (i, dot(&x, a.get(i))))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("nonempty");
        if best >= xx - eps || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);

        let mut minor = 0;
        loop {
            minor += 1;
            if minor > MAX_MINOR {
                return Err(Error::Numerical {
                    solver: "min_norm_point",
                    reason: "minor cycle limit exceeded".into(),
                    best: Some(x),
                });
            }
            let mu = affine_minimizer(a, &corral);
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                break;
            }
            // Step from lambda toward mu until the first weight hits zero.
            let theta = lambda
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= 1e-15)
                .map(|(&l, &m)| if l - m > 0.0 { l / (l - m) } else { 0.0 })
                .fold(1.0_f64, f64::min)
                .clamp(0.0, 1.0);
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let mut k = 0;
            while k < corral.len() {
                if lambda[k] <= 1e-15 {
                    corral.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            if corral.is_empty() {
                return Err(Error::numerical("min_norm_point", "corral emptied"));
            }
            let total: f64 = lambda.iter().sum();
            for l in lambda.iter_mut() {
                *l /= total;
            }
            if corral.len() == 1 {
                lambda = vec![1.0];
                break;
            }
        }
        let mut next = vec![0.0; a.dim()];
        for (&i, &l) in corral.iter().zip(&lambda) {
            for (xi, pi) in next.iter_mut().zip(a.get(i).iter()) {
                *xi += l * pi;
            }
        }
        // Norms decrease strictly in exact arithmetic; no progress means round-off has taken over.
        let stalled = dot(&next, &next) >= xx;
        x = next;
        if stalled {
            break;
        }
    }

    let mut weights = vec![0.0; n];
    for (&i, &l) in corral.iter().zip(&lambda) {
        weights[i] = l;
    }
    let point = Vector::from_vec_unchecked(x);
    let result = MinNormResult {
        distance: norm(&point),
        point,
        weights,
    };
    let gap = result.wolfe_gap(a);
    if gap > tol.dist_tol {
        return Err(Error::Numerical {
            solver: "min_norm_point",
            reason: format!("optimality gap {gap:e} above tolerance"),
            best: Some(result.point.into_inner()),
        });
    }
    Ok(result)
}
