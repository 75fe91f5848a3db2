//! Exposed faces with positive support, end sets and gauges of compact convex sets.
//!
//! For a finite generator set `A` with `C = co A`, the faces of interest are the
//! subsets `A'` for which some `w` satisfies `<a, w> = 1` on `A'` and
//! `<a, w> < 1` on the rest of `A`. The union of their convex hulls is the end
//! set of `C`: the points `v` of `C` such that `t v` leaves `C` for every
//! `t > 1`. Its distance from the origin is what the upper estimates report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    augment_with_origin, dot, norm, support, BodyOracle, PointSet, Tolerances, Vector,
};
use crate::solvers::{lp_solve, min_norm_point, LpOutcome, LpProblem, MinNormResult, VarBound};

/// Largest generator set accepted by [`FaceMode::Enumerate`].
pub const ENUMERATE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceMode {
    /// Certify every nonempty subset (2^|A| - 1 small LPs).
    Enumerate,
    /// Collect argmax faces of `directions` random directions, then certify them.
    Sample { directions: usize, seed: u64 },
}

/// One certified face: `indices` into the generator set, and a direction `w`
/// with `<a, w> = 1` on the face and `<a, w> <= 1 - margin` off it.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub indices: Vec<usize>,
    pub witness: Vector,
    pub margin: f64,
}

impl Face {
    /// Re-checks the stored witness against `a`: equalities within `eq_tol`
    /// (relative to `|w|`), strict side with at least half the LP margin.
    pub fn verify(&self, a: &PointSet, tol: &Tolerances) -> bool {
        let w = &self.witness;
        let wn = w.norm();
        a.iter().enumerate().all(|(i, p)| {
            let v = p.dot(w);
            if self.indices.contains(&i) {
                (v - 1.0).abs() <= tol.eq_tol * (1.0 + wn * p.norm())
            } else {
                v <= 1.0 - 0.5 * tol.lp_margin
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCollection {
    /// Sorted lexicographically by index list.
    pub faces: Vec<Face>,
    /// Set when the collection came from direction sampling and may miss faces.
    pub under_approximation: bool,
}

impl FaceCollection {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn index_sets(&self) -> Vec<Vec<usize>> {
        self.faces.iter().map(|f| f.indices.clone()).collect()
    }
}

/// Margin LP: maximize `s` subject to `<a, w> = 1` on the subset and
/// `<a, w> + s <= 1` elsewhere, with `s <= 1`. Returns the witness and margin
/// when the margin exceeds `lp_margin`.
pub fn certify_face(
    a: &PointSet,
    subset: &[usize],
    tol: &Tolerances,
) -> Result<Option<(Vector, f64)>> {
    if subset.is_empty() {
        return Ok(None);
    }
    let n = a.dim();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LpProblem::maximize(objective).bound(
        n,
        VarBound {
            lower: None,
            upper: Some(1.0),
        },
    );
    for (i, p) in a.iter().enumerate() {
        let mut row = p.as_slice().to_vec();
        if subset.contains(&i) {
            if p.is_zero() {
                return Ok(None);
            }
            row.push(0.0);
            lp = lp.eq(row, 1.0);
        } else {
            row.push(1.0);
            lp = lp.le(row, 1.0);
        }
    }
    match lp_solve(&lp, tol)? {
        LpOutcome::Optimal { z, value } if value > tol.lp_margin => {
            let w = Vector::new(z[..n].to_vec())?;
            Ok(Some((w, value)))
        }
        LpOutcome::Optimal { .. } | LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::numerical(
            "certify_face",
            "margin LP reported unbounded despite s <= 1",
        )),
    }
}

/// The collection of exposed faces of `co A` with positive support value.
pub fn face_collection(a: &PointSet, mode: FaceMode, tol: &Tolerances) -> Result<FaceCollection> {
    match mode {
        FaceMode::Enumerate => {
            if a.len() > ENUMERATE_LIMIT {
                return Err(Error::Capacity {
                    what: "generator set",
                    size: a.len(),
                    limit: ENUMERATE_LIMIT,
                    advice: "use sample mode",
                });
            }
            let total: u32 = 1 << a.len();
            let mut faces = (1..total)
                .into_par_iter()
                .filter_map(|mask| {
                    let subset: Vec<usize> =
                        (0..a.len()).filter(|i| mask & (1 << i) != 0).collect();
                    match certify_face(a, &subset, tol) {
                        Ok(Some((witness, margin))) => Some(Ok(Face {
                            indices: subset,
                            witness,
                            margin,
                        })),
                        Ok(None) => None,
                        Err(e) => Some(Err(e)),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            faces.sort_by(|x, y| x.indices.cmp(&y.indices));
            Ok(FaceCollection {
                faces,
                under_approximation: false,
            })
        }
        FaceMode::Sample { directions, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut candidates: Vec<Vec<usize>> = Vec::new();
            for _ in 0..directions {
                let w: Vec<f64> = (0..a.dim())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let s = support(a, &w, tol)?;
                if s.value > 0.0 && !candidates.contains(&s.argmax) {
                    candidates.push(s.argmax);
                }
            }
            let mut faces = Vec::new();
            for subset in candidates {
                if let Some((witness, margin)) = certify_face(a, &subset, tol)? {
                    faces.push(Face {
                        indices: subset,
                        witness,
                        margin,
                    });
                }
            }
            faces.sort_by(|x, y| x.indices.cmp(&y.indices));
            Ok(FaceCollection {
                faces,
                under_approximation: true,
            })
        }
    }
}

/// Distance from the origin to the end set, with the face and min-norm point realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct EndSetDistance {
    /// `+inf` when the collection is empty.
    pub distance: f64,
    pub face: Option<Face>,
    /// Min-norm point of the minimizing face (weights over the face's points).
    pub nearest: Option<MinNormResult>,
    pub collection: FaceCollection,
}

pub fn end_set_distance(a: &PointSet, mode: FaceMode, tol: &Tolerances) -> Result<EndSetDistance> {
    let collection = face_collection(a, mode, tol)?;
    end_set_distance_over(a, collection, tol)
}

/// Minimum over the faces of `collection` of the distance from the origin to the face hull.
pub fn end_set_distance_over(
    a: &PointSet,
    collection: FaceCollection,
    tol: &Tolerances,
) -> Result<EndSetDistance> {
    let mut best: Option<(f64, Face, MinNormResult)> = None;
    for face in &collection.faces {
        let pts = a.subset(&face.indices)?;
        let r = min_norm_point(&pts, tol)?;
        if best.as_ref().is_none_or(|b| r.distance < b.0) {
            best = Some((r.distance, face.clone(), r));
        }
    }
    Ok(match best {
        Some((distance, face, nearest)) => EndSetDistance {
            distance,
            face: Some(face),
            nearest: Some(nearest),
            collection,
        },
        None => EndSetDistance {
            distance: f64::INFINITY,
            face: None,
            nearest: None,
            collection,
        },
    })
}

/// A compact convex set given either by generators or by a membership oracle.
#[derive(Debug, Clone, Copy)]
pub enum Body<'a> {
    Polytope(&'a PointSet),
    Oracle(&'a BodyOracle),
}

impl Body<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(a) => a.dim(),
            Body::Oracle(b) => b.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeMethod {
    Lp,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeValue {
    /// `+inf` when the point lies outside the cone generated by the body.
    pub value: f64,
    pub method: GaugeMethod,
    /// Membership queries (bisection) or LP solves used.
    pub queries: usize,
}

impl GaugeValue {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Gauge of `co(C ∪ {0})` at `x`.
pub fn gauge(body: Body<'_>, x: &[f64], tol: &Tolerances) -> Result<GaugeValue> {
    if body.dim() != x.len() {
        return Err(Error::input(format!(
            "query point has dimension {}, body has {}",
            x.len(),
            body.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("query point must be finite"));
    }
    match body {
        Body::Polytope(a) => gauge_lp(a, x, tol),
        Body::Oracle(b) => Ok(gauge_bisection(b, x, tol)),
    }
}

fn gauge_lp(a: &PointSet, x: &[f64], tol: &Tolerances) -> Result<GaugeValue> {
    let method = GaugeMethod::Lp;
    if x.iter().all(|&v| v == 0.0) {
        return Ok(GaugeValue {
            value: 0.0,
            method,
            queries: 0,
        });
    }
    // The origin generator contributes nothing to x = sum mu_i a_i, so min
    // sum mu_i over the nonzero generators is the gauge of co(C ∪ {0}).
    let aug = augment_with_origin(a);
    let gens: Vec<&Vector> = aug.iter().filter(|p| !p.is_zero()).collect();
    let m = gens.len();
    let mut lp = LpProblem::maximize(vec![-1.0; m]);
    for j in 0..m {
        lp = lp.bound(j, VarBound::NONNEG);
    }
    for (d, &xd) in x.iter().enumerate() {
        lp = lp.eq(gens.iter().map(|g| g[d]).collect(), xd);
    }
    let value = match lp_solve(&lp, tol)? {
        LpOutcome::Optimal { value, .. } => (-value).max(0.0),
        LpOutcome::Infeasible => f64::INFINITY,
        LpOutcome::Unbounded => return Err(Error::numerical("gauge", "gauge LP unbounded")),
    };
    Ok(GaugeValue {
        value,
        method,
        queries: 1,
    })
}

/// Smallest `t > 0` with `x / t` in the body: geometric scan upward from the
/// radius bound, then bisection to width `eq_tol (1 + |x|)`.
fn gauge_bisection(body: &BodyOracle, x: &[f64], tol: &Tolerances) -> GaugeValue {
    let method = GaugeMethod::Bisection;
    let xn = norm(x);
    if xn == 0.0 {
        return GaugeValue {
            value: 0.0,
            method,
            queries: 0,
        };
    }
    let queries = std::cell::Cell::new(0);
    let member = |t: f64| {
        queries.set(queries.get() + 1);
        let p: Vec<f64> = x.iter().map(|v| v / t).collect();
        body.contains(&p)
    };
    // x / t can only be a member once |x| / t <= radius_bound.
    let floor = (xn / body.radius_bound()).max(tol.eq_tol);
    let cap = 1.0 / tol.eq_tol;
    let (mut lo, mut hi);
    if member(floor) {
        // Either x / floor sits on the bounding sphere, or x is tiny and the
        // gauge lies below eq_tol.
        let value = if floor > tol.eq_tol {
            floor
        } else {
            bisect_below(&member, 0.0, floor, tol, xn)
        };
        return GaugeValue {
            value,
            method,
            queries: queries.get(),
        };
    }
    lo = floor;
    hi = floor * 2.0;
    loop {
        if hi > cap {
            return GaugeValue {
                value: f64::INFINITY,
                method,
                queries: queries.get(),
            };
        }
        if member(hi) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let value = bisect_below(&member, lo, hi, tol, xn);
    GaugeValue {
        value,
        method,
        queries: queries.get(),
    }
}

/// Bisection on a predicate that is false at `lo` and true at `hi`.
fn bisect_below(
    member: &impl Fn(f64) -> bool,
    mut lo: f64,
    mut hi: f64,
    tol: &Tolerances,
    xn: f64,
) -> f64 {
    let width = tol.eq_tol * (1.0 + xn);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if member(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x` lies in the end set iff the gauge of the origin-augmented body equals 1.
pub fn end_set_member(body: Body<'_>, x: &[f64], tol: &Tolerances) -> Result<bool> {
    let g = gauge(body, x, tol)?;
    Ok((g.value - 1.0).abs() <= tol.active_tol)
}

/// Random convex combination of the points of one face.
pub fn sample_face_point(a: &PointSet, face: &Face, rng: &mut impl rand::Rng) -> Vec<f64> {
    let weights: Vec<f64> = face
        .indices
        .iter()
        .map(|_| rng.random_range(0.0..1.0) + 1e-3)
        .collect();
    let total: f64 = weights.iter().sum();
    let mut v = vec![0.0; a.dim()];
    for (&i, w) in face.indices.iter().zip(&weights) {
        for (vi, pi) in v.iter_mut().zip(a.get(i).iter()) {
            *vi += w / total * pi;
        }
    }
    v
}

/// `<w, v>` for a face witness and point, exposed for reports.
pub fn witness_value(face: &Face, v: &[f64]) -> f64 {
    dot(&face.witness, v)
}
