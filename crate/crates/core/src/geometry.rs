//! Vectors, finite point sets, membership-oracle bodies, tolerances and the
//! support function.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A finite point of `R^n`, `n >= 1`.
#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("vector must have positive dimension"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::input(format!(
                "vector coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Vector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector must have positive dimension");
        Vector(vec![0.0; dim])
    }

    /// Builds a vector from data the caller knows to be finite.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Vector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    /// `self + t * dir`
    pub fn offset(&self, dir: &[f64], t: f64) -> Vector {
        Vector(self.0.iter().zip(dir).map(|(a, d)| a + t * d).collect())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl TryFrom<&[f64]> for Vector {
    type Error = Error;

    fn try_from(coords: &[f64]) -> Result<Self> {
        Vector::new(coords.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Equality of reals.
    pub eq_tol: f64,
    /// Active-set membership.
    pub active_tol: f64,
    /// Minimum certified margin for strict inequalities.
    pub lp_margin: f64,
    /// Stopping tolerance of the iterative solvers.
    pub dist_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-9,
            active_tol: 1e-8,
            lp_margin: 1e-7,
            dist_tol: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("eq_tol", self.eq_tol),
            ("active_tol", self.active_tol),
            ("lp_margin", self.lp_margin),
            ("dist_tol", self.dist_tol),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.eq_tol > self.active_tol {
            return Err(Error::input("eq_tol must not exceed active_tol"));
        }
        Ok(())
    }
}

/// A nonempty finite set of points of uniform dimension.
///
/// Exact duplicates are dropped on construction (first occurrence wins, along
/// with its label).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vector>,
    labels: Option<Vec<String>>,
}

impl PointSet {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_labels(points: Vec<Vector>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::input(format!(
                "{} labels given for {} points",
                labels.len(),
                points.len()
            )));
        }
        Self::build(points, Some(labels))
    }

    /// Convenience constructor from raw coordinate rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| Vector::new(r.as_ref().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    fn build(points: Vec<Vector>, labels: Option<Vec<String>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::input("point set must be nonempty"));
        };
        let dim = first.dim();
        if let Some(bad) = points.iter().position(|p| p.dim() != dim) {
            return Err(Error::input(format!(
                "point {bad} has dimension {}, expected {dim}",
                points[bad].dim()
            )));
        }
        let mut kept: Vec<Vector> = Vec::with_capacity(points.len());
        let mut kept_labels = labels.as_ref().map(|_| Vec::new());
        for (i, p) in points.into_iter().enumerate() {
            if kept.iter().any(|q| q == &p) {
                continue;
            }
            if let (Some(out), Some(src)) = (kept_labels.as_mut(), labels.as_ref()) {
                out.push(src[i].clone());
            }
            kept.push(p);
        }
        Ok(PointSet {
            points: kept,
            labels: kept_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &Vector {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector> {
        self.points.iter()
    }

    /// The points with the given indices, as a new set.
    pub fn subset(&self, indices: &[usize]) -> Result<PointSet> {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        match &self.labels {
            Some(l) => {
                PointSet::with_labels(points, indices.iter().map(|&i| l[i].clone()).collect())
            }
            None => PointSet::new(points),
        }
    }

    /// Index of an exactly equal point, if present.
    pub fn position(&self, p: &[f64]) -> Option<usize> {
        self.points.iter().position(|q| q.as_slice() == p)
    }
}

/// Value and maximizing indices of the support function of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub value: f64,
    pub argmax: Vec<usize>,
}

/// Support function `max_i <a_i, w>` together with its (tolerance-widened)
/// argmax, which indexes the exposed face of `co A` in direction `w`.
pub fn support(a: &PointSet, w: &[f64], tol: &Tolerances) -> Result<Support> {
    if a.dim() != w.len() {
        return Err(Error::input(format!(
            "direction has dimension {}, point set has {}",
            w.len(),
            a.dim()
        )));
    }
    let values: Vec<f64> = a.iter().map(|p| p.dot(w)).collect();
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = value - tol.eq_tol * (1.0 + value.abs());
    let argmax = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= cut)
        .map(|(i, _)| i)
        .collect();
    Ok(Support { value, argmax })
}

/// Generators of `co(C ∪ {0})` for `C = co A`.
pub fn augment_with_origin(a: &PointSet) -> PointSet {
    let origin = Vector::zeros(a.dim());
    if a.position(&origin).is_some() {
        return a.clone();
    }
    let mut points = a.points.clone();
    points.push(origin);
    let labels = a.labels.clone().map(|mut l| {
        l.push("origin".to_string());
        l
    });
    PointSet { points, labels }
}

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A compact convex body known only through a membership test.
#[derive(Clone)]
pub struct BodyOracle {
    dim: usize,
    member: Membership,
    radius_bound: f64,
    contains_origin: bool,
}

impl fmt::Debug for BodyOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BodyOracle")
            .field("dim", &self.dim)
            .field("radius_bound", &self.radius_bound)
            .field("contains_origin", &self.contains_origin)
            .finish_non_exhaustive()
    }
}

impl BodyOracle {
    /// Wraps a membership predicate. In debug builds the body is spot-checked
    /// for convexity with 100 random midpoint tests.
    pub fn new(
        dim: usize,
        radius_bound: f64,
        member: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("body dimension must be positive"));
        }
        if !(radius_bound.is_finite() && radius_bound > 0.0) {
            return Err(Error::input("radius bound must be positive and finite"));
        }
        let member: Membership = Arc::new(member);
        let contains_origin = member(&vec![0.0; dim]);
        let body = BodyOracle {
            dim,
            member,
            radius_bound,
            contains_origin,
        };
        if cfg!(debug_assertions) {
            body.check_convexity(100, 0x5eed)?;
        }
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius_bound(&self) -> f64 {
        self.radius_bound
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_origin
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.member)(x)
    }

    /// Samples members of the bounding ball and checks that midpoints of
    /// `pairs` member pairs are members and that members respect the radius bound.
    pub fn check_convexity(&self, pairs: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.radius_bound;
        let mut members: Vec<Vec<f64>> = Vec::new();
        let mut attempts = 0;
        while members.len() < 2 * pairs && attempts < 200 * pairs {
            attempts += 1;
            let x: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-r..=r)).collect();
            if self.contains(&x) {
                if norm(&x) > r * (1.0 + 1e-12) {
                    return Err(Error::input(format!(
                        "member {x:?} lies outside the radius bound {r}"
                    )));
                }
                members.push(x);
            }
        }
        for pair in members.chunks_exact(2) {
            let mid: Vec<f64> = pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            if !self.contains(&mid) {
                return Err(Error::input(format!(
                    "body is not convex: midpoint {mid:?} of {:?} and {:?} is not a member",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }
}
