//! Euclidean projection onto a polyhedron `{y : <a_i, y> <= b_i}` by a
//! primal active-set method started from a known feasible point.
//!
//! Dykstra's iteration crawls when many constraints are nearly parallel (a
//! finely discretized curve of halfspaces); the active-set method moves along
//! the faces and stops at the exact projection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, Vector};
use crate::solvers::Projection;

const MAX_ITER: usize = 200_000;

/// Projects `x` onto `{y : <normals[i], y> <= offsets[i]}`; `start` must be feasible.
pub fn project_polyhedron(
    normals: &[Vec<f64>],
    offsets: &[f64],
    x: &[f64],
    start: &[f64],
) -> Result<Projection> {
    let n = x.len();
    if normals.len() != offsets.len() || normals.iter().any(|a| a.len() != n) || start.len() != n {
        return Err(Error::input(
            "polyhedron rows, offsets and points must agree in dimension",
        ));
    }
    let scale = 1.0 + norm(x) + norm(start);
    let feas_tol = 1e-10 * scale;
    if let Some(i) = (0..normals.len())
        .find(|&i| dot(&normals[i], start) - offsets[i] > feas_tol * (1.0 + norm(&normals[i])))
    {
        return Err(Error::input(format!("start point violates constraint {i}")));
    }
    if (0..normals.len()).all(|i| dot(&normals[i], x) <= offsets[i]) {
        return Ok(Projection {
            point: Vector::new(x.to_vec())?,
            distance: 0.0,
            cycles: 0,
        });
    }

    let mut y = start.to_vec();
    let mut work: Vec<usize> = Vec::new();
    for iter in 1..=MAX_ITER {
        let r: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let (s, lambda) = step_and_multipliers(normals, &work, &r);
        if norm(&s) <= 1e-14 * scale + 1e-12 * norm(&r) {
            // stationary on the working face: check multipliers
            match lambda
                .iter()
                .enumerate()
                .filter(|(_, &l)| l < -1e-12 * scale)
                .min_by(|a, b| a.1.total_cmp(b.1))
            {
                Some((k, _)) => {
                    work.remove(k);
                    continue;
                }
                None => {
                    return Ok(Projection {
                        distance: distance(x, &y),
                        point: Vector::new(y)?,
                        cycles: iter,
                    })
                }
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (i, a) in normals.iter().enumerate() {
            if work.contains(&i) {
                continue;
            }
            let as_ = dot(a, &s);
            if as_ > 1e-15 * norm(a) * norm(&s) {
                let room = (offsets[i] - dot(a, &y)).max(0.0);
                let t = room / as_;
                if t < alpha {
                    alpha = t;
                    blocking = Some(i);
                }
            }
        }
        for (yi, si) in y.iter_mut().zip(&s) {
            *yi += alpha * si;
        }
        if let Some(i) = blocking {
            work.push(i);
        }
    }
    Err(Error::Numerical {
        solver: "project_polyhedron",
        reason: format!("no convergence within {MAX_ITER} iterations"),
        best: Some(y),
    })
}

/// Projection of `r` onto the null space of the working rows (modified
/// Gram-Schmidt, stable for nearly parallel rows) and the least-squares
/// multipliers of `A_W^T lambda = r - s`.
fn step_and_multipliers(normals: &[Vec<f64>], work: &[usize], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if work.is_empty() {
        return (r.to_vec(), Vec::new());
    }
    let n = r.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &i in work {
        let mut q = normals[i].clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&q, b);
                for (qi, bi) in q.iter_mut().zip(b) {
                    *qi -= c * bi;
                }
            }
        }
        let qn = norm(&q);
        if qn > 1e-12 * norm(&normals[i]) {
            basis.push(q.iter().map(|v| v / qn).collect());
        }
    }
    let mut s = r.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let c = dot(&s, b);
            for (si, bi) in s.iter_mut().zip(b) {
                *si -= c * bi;
            }
        }
    }
    let at = DMatrix::from_fn(n, work.len(), |j, i| normals[work[i]][j]);
    let rhs = DVector::from_iterator(n, r.iter().zip(&s).map(|(a, b)| a - b));
    let svd = at.svd(true, true);
    let cut = 1e-12 * svd.singular_values.max().max(1e-300);
    let lambda = svd
        .solve(&rhs, cut)
        .unwrap_or_else(|_| DVector::zeros(work.len()));
    (s, lambda.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_corner() {
        let normals = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = project_polyhedron(&normals, &[0.0, 0.0], &[2.0, 3.0], &[-1.0, -1.0]).unwrap();
        assert_eq!(p.point.as_slice(), &[0.0, 0.0]);
        let p = project_polyhedron(&normals, &[0.0, 0.0], &[2.0, -3.0], &[-1.0, -1.0]).unwrap();
        assert!((p.distance - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fine_polygon_matches_circle() {
        let k = 4096;
        let normals: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let offsets = vec![1.0; k];
        for x in [[1.5, 0.5], [-2.0, 0.1], [0.3, 1.2]] {
            let p = project_polyhedron(&normals, &offsets, &x, &[0.0, 0.0]).unwrap();
            let exact = norm(&x) - 1.0;
            assert!(
                p.distance <= exact + 1e-12 && exact - p.distance < 1e-6,
                "{x:?} {p:?}"
            );
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        assert!(project_polyhedron(&[vec![1.0]], &[0.0], &[2.0], &[1.0]).is_err());
    }
}
