//! Independent oracles and seeded instance generators shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ebmod_core::geometry::augment_with_origin;
use ebmod_core::{
    end_set_distance, face_collection, gauge, min_norm_point, project_intersection,
    sample_face_point, support, Body, ConvexPiece, FaceMode, PointSet, SmoothPiece, Tolerances,
    Vector,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `m z = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |a, v| a.max(v.abs()))
        .max(1.0);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        let (top, rest) = m.split_at_mut(c + 1);
        let pivot = &top[c];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[c] / pivot[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
            rhs[c + 1 + off] -= f * rhs[c];
        }
    }
    let mut z = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * z[k]).sum();
        z[c] = (rhs[c] - s) / m[c][c];
    }
    Some(z)
}

/// Exact distance from the origin to `co points`: the nearest point is the
/// affine minimizer of some affinely independent subset with nonnegative
/// weights, so enumerating subsets of size at most `dim + 1` finds it.
pub fn exact_min_norm(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    let n = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        if k > n + 1 {
            continue;
        }
        // [G 1; 1^T 0] [mu; lambda] = [0; 1]
        let mut sys = vec![vec![0.0; k + 1]; k + 1];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sys[r][c] = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
            }
            sys[r][k] = 1.0;
            sys[k][r] = 1.0;
        }
        let mut rhs = vec![0.0; k + 1];
        rhs[k] = 1.0;
        let Some(z) = solve(sys, rhs) else { continue };
        if z[..k].iter().any(|&mu| mu < -1e-12) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (r, &i) in idx.iter().enumerate() {
            for (xd, pd) in x.iter_mut().zip(&points[i]) {
                *xd += z[r] * pd;
            }
        }
        best = best.min(norm(&x));
    }
    best
}

/// Minimum of `|sum w_i a_i|` over the weights with denominator `resolution`;
/// an upper bound on the true distance.
pub fn grid_min_norm(points: &[Vec<f64>], resolution: usize) -> f64 {
    fn walk(
        points: &[Vec<f64>],
        left: usize,
        res: usize,
        i: usize,
        acc: &mut Vec<f64>,
        best: &mut f64,
    ) {
        let last = i + 1 == points.len();
        let range = if last { left..=left } else { 0..=left };
        for c in range {
            let w = c as f64 / res as f64;
            for (a, p) in acc.iter_mut().zip(&points[i]) {
                *a += w * p;
            }
            if last {
                *best = best.min(norm(acc));
            } else {
                walk(points, left - c, res, i + 1, acc, best);
            }
            for (a, p) in acc.iter_mut().zip(&points[i]) {
                *a -= w * p;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut acc = vec![0.0; points[0].len()];
    walk(points, resolution, resolution, 0, &mut acc, &mut best);
    best
}

/// `n <= 4`, `|A| <= 6`, coordinates in `[-2, 2]` plus a random shift so the
/// origin is sometimes inside the hull and sometimes not.
pub fn random_instance(r: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = r.random_range(1..=4);
    let m = r.random_range(1..=6);
    let shift: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    (0..m)
        .map(|_| {
            shift
                .iter()
                .map(|s| s + r.random_range(-2.0..2.0))
                .collect()
        })
        .collect()
}

/// Planar integer point set with `|A| <= 6`, coordinates in `-3..=3`.
pub fn random_integer_set(r: &mut impl Rng) -> Vec<Vec<f64>> {
    let m = r.random_range(1..=6);
    (0..m)
        .map(|_| vec![r.random_range(-3..=3) as f64, r.random_range(-3..=3) as f64])
        .collect()
}

/// Outcome of one criterion-level check, with the first failure described.
pub type Check = Result<(), String>;

/// Wolfe against the exact oracle (within `1e-5`) and the grid bound, plus
/// the optimality certificate, on `count` seeded instances.
pub fn min_norm_oracle(count: usize, seed: u64, resolution: usize) -> Check {
    let tol = Tolerances::default();
    let mut r = rng(seed);
    for k in 0..count {
        let pts = random_instance(&mut r);
        let a = PointSet::from_rows(&pts).map_err(|e| e.to_string())?;
        let w = min_norm_point(&a, &tol).map_err(|e| format!("instance {k}: {e}"))?;
        let exact = exact_min_norm(&pts);
        if (w.distance - exact).abs() > 1e-5 {
            return Err(format!(
                "instance {k}: wolfe {} vs exact {exact} on {pts:?}",
                w.distance
            ));
        }
        let grid = grid_min_norm(&pts, resolution);
        if w.distance > grid + 1e-12 {
            return Err(format!(
                "instance {k}: wolfe {} above grid bound {grid}",
                w.distance
            ));
        }
        if !w.certify(&a, &tol) {
            return Err(format!(
                "instance {k}: optimality certificate fails on {pts:?}"
            ));
        }
    }
    Ok(())
}

/// Faces re-verify, sampled face points have gauge 1, the end-set distance is
/// positive when finite, and every positive argmax set of a random direction
/// is among the reported faces.
pub fn face_soundness(count: usize, seed: u64) -> Check {
    let tol = Tolerances::default();
    let mut r = rng(seed);
    for k in 0..count {
        let pts = random_integer_set(&mut r);
        let a = PointSet::from_rows(&pts).map_err(|e| e.to_string())?;
        let faces = face_collection(&a, FaceMode::Enumerate, &tol).map_err(|e| e.to_string())?;
        for f in &faces.faces {
            if !f.verify(&a, &tol) {
                return Err(format!(
                    "set {k}: face {:?} fails its certificate",
                    f.indices
                ));
            }
            for _ in 0..8 {
                let v = sample_face_point(&a, f, &mut r);
                let g = gauge(Body::Polytope(&a), &v, &tol)
                    .map_err(|e| e.to_string())?
                    .value;
                if (g - 1.0).abs() > 1e-6 {
                    return Err(format!(
                        "set {k}: point {v:?} of face {:?} has gauge {g}",
                        f.indices
                    ));
                }
            }
        }
        let d = end_set_distance(&a, FaceMode::Enumerate, &tol).map_err(|e| e.to_string())?;
        if d.distance.is_finite() && d.distance <= 0.0 {
            return Err(format!(
                "set {k}: end set distance {} on {pts:?}",
                d.distance
            ));
        }
        let sets = faces.index_sets();
        for _ in 0..64 {
            let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let s = support(&a, &[t.cos(), t.sin()], &tol).map_err(|e| e.to_string())?;
            if s.value > 1e-6 && !sets.contains(&s.argmax) {
                return Err(format!(
                    "set {k}: exposed face {:?} missing from {sets:?}",
                    s.argmax
                ));
            }
        }
    }
    Ok(())
}

fn random_dir(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-3.0..3.0)).collect()
}

/// Sublinearity and positive homogeneity of the support function.
pub fn support_sublinear(cases: usize, seed: u64) -> Check {
    let tol = Tolerances::default();
    let mut r = rng(seed);
    for _ in 0..cases {
        let pts = random_instance(&mut r);
        let a = PointSet::from_rows(&pts).map_err(|e| e.to_string())?;
        let n = a.dim();
        let (u, w) = (random_dir(&mut r, n), random_dir(&mut r, n));
        let lam: f64 = r.random_range(0.0..5.0);
        let s = |d: &[f64]| {
            support(&a, d, &tol)
                .map(|s| s.value)
                .map_err(|e| e.to_string())
        };
        let uw: Vec<f64> = u.iter().zip(&w).map(|(x, y)| x + y).collect();
        let scale = 1.0 + s(&u)?.abs() + s(&w)?.abs();
        if s(&uw)? > s(&u)? + s(&w)? + 1e-12 * scale {
            return Err(format!("subadditivity fails for {pts:?}"));
        }
        let lu: Vec<f64> = u.iter().map(|x| lam * x).collect();
        if (s(&lu)? - lam * s(&u)?).abs() > 1e-12 * (1.0 + lam) * scale {
            return Err(format!("homogeneity fails for {pts:?}, lambda {lam}"));
        }
    }
    Ok(())
}

/// The support function of `co(C ∪ {0})` is `max(sigma_C, 0)`.
pub fn support_with_origin(cases: usize, seed: u64) -> Check {
    let tol = Tolerances::default();
    let mut r = rng(seed);
    for _ in 0..cases {
        let pts = random_instance(&mut r);
        let a = PointSet::from_rows(&pts).map_err(|e| e.to_string())?;
        let aug = augment_with_origin(&a);
        let w = random_dir(&mut r, a.dim());
        let lhs = support(&aug, &w, &tol).map_err(|e| e.to_string())?.value;
        let rhs = support(&a, &w, &tol)
            .map_err(|e| e.to_string())?
            .value
            .max(0.0);
        if (lhs - rhs).abs() > 1e-12 * (1.0 + rhs.abs()) {
            return Err(format!("sigma of the augmented set {lhs} vs {rhs}"));
        }
    }
    Ok(())
}

/// Analytic gradients of random affine and quadratic pieces against central differences.
pub fn gradients_match(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..cases {
        let n = r.random_range(1..=4);
        let b = Vector::new(random_dir(&mut r, n)).map_err(|e| e.to_string())?;
        let piece = if r.random_bool(0.5) {
            SmoothPiece::affine(b, r.random_range(-1.0..1.0))
        } else {
            let mut q = vec![vec![0.0; n]; n];
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                for j in i..n {
                    let v = r.random_range(-2.0..2.0);
                    q[i][j] = v;
                    q[j][i] = v;
                }
            }
            SmoothPiece::quadratic(q, b, r.random_range(-1.0..1.0))
        }
        .map_err(|e| e.to_string())?;
        let x = random_dir(&mut r, n);
        let err = piece.gradient_error(&x);
        if err > 1e-6 {
            return Err(format!("gradient error {err:e} at {x:?}"));
        }
    }
    Ok(())
}

/// Projections onto random intersections of balls and halfspaces that all
/// contain a known point: idempotent, and `<x - p, y - p> <= 0` for feasible `y`.
pub fn projection_properties(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let dist_tol = 1e-9;
    for k in 0..cases {
        let n = r.random_range(1..=4);
        let anchor = random_dir(&mut r, n);
        let mut pieces = Vec::new();
        for _ in 0..r.random_range(1..=4) {
            if r.random_bool(0.5) {
                let c: Vec<f64> = anchor
                    .iter()
                    .map(|a| a + r.random_range(-1.0..1.0))
                    .collect();
                let d: f64 = c
                    .iter()
                    .zip(&anchor)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let radius = d + r.random_range(0.1..1.5);
                pieces.push(ConvexPiece::ball(Vector::new(c).unwrap(), radius).unwrap());
            } else {
                let a = random_dir(&mut r, n);
                let off = a.iter().zip(&anchor).map(|(x, y)| x * y).sum::<f64>()
                    + r.random_range(0.0..1.0);
                pieces.push(ConvexPiece::halfspace(Vector::new(a).unwrap(), off).unwrap());
            }
        }
        let x: Vec<f64> = anchor
            .iter()
            .map(|a| a + r.random_range(-4.0..4.0))
            .collect();
        let p =
            project_intersection(&pieces, &x, dist_tol).map_err(|e| format!("case {k}: {e}"))?;
        let pp = project_intersection(&pieces, p.point.as_slice(), dist_tol)
            .map_err(|e| format!("case {k}: {e}"))?;
        let moved = norm(
            &pp.point
                .as_slice()
                .iter()
                .zip(p.point.as_slice())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        if moved > 1e-6 {
            return Err(format!("case {k}: reprojection moved by {moved:e}"));
        }
        // feasible test points: the anchor and projections of random points
        let mut ys = vec![anchor.clone()];
        for _ in 0..4 {
            let z: Vec<f64> = anchor
                .iter()
                .map(|a| a + r.random_range(-3.0..3.0))
                .collect();
            ys.push(
                project_intersection(&pieces, &z, dist_tol)
                    .map_err(|e| e.to_string())?
                    .point
                    .into_inner(),
            );
        }
        let pv = p.point.as_slice();
        for y in &ys {
            let vi: f64 = x
                .iter()
                .zip(pv)
                .zip(y)
                .map(|((xi, pi), yi)| (xi - pi) * (yi - pi))
                .sum();
            let scale = (1.0 + norm(&x)) * (1.0 + norm(y));
            if vi > 1e-5 * scale {
                return Err(format!("case {k}: variational inequality {vi:e} at {y:?}"));
            }
        }
    }
    Ok(())
}
