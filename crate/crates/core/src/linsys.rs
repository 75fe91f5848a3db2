//! Linear inequality systems `<a_t, x> <= b_t` indexed by a finite set or by
//! a compact parameter interval: residuals, active indices, the index
//! collection of exposed faces, the modulus formula and sampled regularity
//! probes.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::endset::{end_set_distance_over, face_collection, FaceCollection, FaceMode};
use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, PointSet, Tolerances, Vector};
use crate::maxfunc::{self, MaxFunction, SmoothPiece};
use crate::sampling::{golden_max, unit_directions, SamplingConfig};
use crate::solvers::polyhedron::project_polyhedron;
use crate::solvers::{
    min_norm_point, project_intersection_with, ConvexPiece, DykstraConfig, MinNormResult,
};

/// `t -> (a_t, b_t)`
pub type CoeffFn = Arc<dyn Fn(f64) -> (Vec<f64>, f64) + Send + Sync>;

/// Exact maximizers of `t -> <a_t, x> - b_t` for a point `x` and tolerance,
/// or `None` where the solver has no closed form.
pub type ActiveSolver = Arc<dyn Fn(&[f64], f64) -> Option<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum Coefficients {
    Analytic {
        name: String,
        f: CoeffFn,
    },
    /// Piecewise-linear interpolation of sampled coefficients.
    Table {
        ts: Vec<f64>,
        a: Vec<Vector>,
        b: Vec<f64>,
    },
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Analytic { name, .. } => {
                f.debug_struct("Analytic").field("name", name).finish()
            }
            Coefficients::Table { ts, .. } => {
                f.debug_struct("Table").field("len", &ts.len()).finish()
            }
        }
    }
}

/// One-parameter family of constraints over `[t0, t1]`.
#[derive(Clone)]
pub struct Curve {
    t0: f64,
    t1: f64,
    dim: usize,
    coeff: Coefficients,
    grid_size: usize,
    solver: Option<ActiveSolver>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("dim", &self.dim)
            .field("coeff", &self.coeff)
            .field("grid_size", &self.grid_size)
            .field("analytic_solver", &self.solver.is_some())
            .finish()
    }
}

impl Curve {
    pub fn t_range(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn has_solver(&self) -> bool {
        self.solver.is_some()
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeff
    }

    pub fn coefficient(&self, t: f64) -> (Vec<f64>, f64) {
        match &self.coeff {
            Coefficients::Analytic { f, .. } => f(t),
            Coefficients::Table { ts, a, b } => {
                let k = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
                let (s0, s1) = (ts[k - 1], ts[k]);
                let w = ((t - s0) / (s1 - s0)).clamp(0.0, 1.0);
                let av = a[k - 1]
                    .iter()
                    .zip(a[k].iter())
                    .map(|(p, q)| (1.0 - w) * p + w * q)
                    .collect();
                (av, (1.0 - w) * b[k - 1] + w * b[k])
            }
        }
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        let (a, b) = self.coefficient(t);
        dot(&a, x) - b
    }

    fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.grid_size as f64
    }

    fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.grid_size)
            .map(|i| {
                if i == self.grid_size {
                    self.t1
                } else {
                    self.t0 + h * i as f64
                }
            })
            .collect()
    }

    /// Grid maximum refined by golden-section search around every grid local maximum.
    fn maximize(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<(f64, f64)>) {
        let ts = self.grid();
        let vals: Vec<f64> = ts.iter().map(|&t| self.value(x, t)).collect();
        let n = ts.len();
        let mut refined = Vec::new();
        for i in 0..n {
            let left_ok = i == 0 || vals[i] >= vals[i - 1];
            let right_ok = i + 1 == n || vals[i] > vals[i + 1];
            let strict = (i > 0 && vals[i] > vals[i - 1]) || (i + 1 < n && vals[i] > vals[i + 1]);
            if left_ok && right_ok && strict {
                let lo = ts[i.saturating_sub(1)];
                let hi = ts[(i + 1).min(n - 1)];
                refined.push(golden_max(|t| self.value(x, t), lo, hi));
            }
        }
        (ts, vals, refined)
    }
}

/// A constraint index: a row of a finite system or a curve parameter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Index {
    Row(usize),
    Param(f64),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Row(i) => write!(f, "{i}"),
            Index::Param(t) => write!(f, "t={t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum IndexModel {
    Finite(Vec<(Vector, f64)>),
    Curve(Curve),
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    dim: usize,
    model: IndexModel,
}

impl LinearSystem {
    pub fn finite(rows: Vec<(Vector, f64)>) -> Result<Self> {
        let Some((first, _)) = rows.first() else {
            return Err(Error::input("linear system needs at least one row"));
        };
        let dim = first.dim();
        for (i, (a, b)) in rows.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::input(format!(
                    "row {i} has dimension {}, expected {dim}",
                    a.dim()
                )));
            }
            if !b.is_finite() {
                return Err(Error::input(format!(
                    "row {i} has a non-finite right-hand side"
                )));
            }
        }
        Ok(LinearSystem {
            dim,
            model: IndexModel::Finite(rows),
        })
    }

    /// Analytic coefficient family on `[t0, t1]`.
    pub fn curve(
        name: impl Into<String>,
        dim: usize,
        (t0, t1): (f64, f64),
        grid_size: usize,
        f: impl Fn(f64) -> (Vec<f64>, f64) + Send + Sync + 'static,
    ) -> Result<Self> {
        check_range(t0, t1, grid_size)?;
        let f: CoeffFn = Arc::new(f);
        for t in [t0, 0.5 * (t0 + t1), t1] {
            let (a, b) = f(t);
            if a.len() != dim || a.iter().chain([&b]).any(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "coefficients at t = {t} are malformed"
                )));
            }
        }
        Ok(LinearSystem {
            dim,
            model: IndexModel::Curve(Curve {
                t0,
                t1,
                dim,
                coeff: Coefficients::Analytic {
                    name: name.into(),
                    f,
                },
                grid_size,
                solver: None,
            }),
        })
    }

    /// Tabulated coefficients, interpolated linearly. Successive jumps must
    /// stay within ten times the mean jump, a crude continuity check.
    pub fn table(ts: Vec<f64>, rows: Vec<(Vector, f64)>, grid_size: usize) -> Result<Self> {
        if ts.len() < 2 || ts.len() != rows.len() {
            return Err(Error::input(
                "table needs at least two rows and one parameter per row",
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|t| !t.is_finite()) {
            return Err(Error::input(
                "table parameters must be finite and strictly increasing",
            ));
        }
        check_range(ts[0], ts[ts.len() - 1], grid_size)?;
        let dim = rows[0].0.dim();
        if rows.iter().any(|(a, b)| a.dim() != dim || !b.is_finite()) {
            return Err(Error::input(
                "table rows must share one dimension and have finite offsets",
            ));
        }
        let jumps: Vec<f64> = rows
            .windows(2)
            .map(|w| (distance(&w[0].0, &w[1].0).powi(2) + (w[0].1 - w[1].1).powi(2)).sqrt())
            .collect();
        let mean = jumps.iter().sum::<f64>() / jumps.len() as f64;
        if let Some(k) = jumps.iter().position(|&j| j > 10.0 * mean + 1e-12) {
            return Err(Error::input(format!(
                "table coefficients jump between rows {k} and {} ({:e} vs mean {mean:e}); not continuous",
                k + 1,
                jumps[k]
            )));
        }
        let (a, b) = rows.into_iter().unzip();
        Ok(LinearSystem {
            dim,
            model: IndexModel::Curve(Curve {
                t0: ts[0],
                t1: ts[ts.len() - 1],
                dim,
                coeff: Coefficients::Table { ts, a, b },
                grid_size,
                solver: None,
            }),
        })
    }

    /// Attaches an exact active-index solver to a curve system.
    pub fn with_active_solver(
        mut self,
        solver: impl Fn(&[f64], f64) -> Option<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        if let IndexModel::Curve(c) = &mut self.model {
            c.solver = Some(Arc::new(solver));
        }
        self
    }

    /// Same system with a different curve grid size.
    pub fn with_grid_size(mut self, grid_size: usize) -> Result<Self> {
        if let IndexModel::Curve(c) = &mut self.model {
            check_range(c.t0, c.t1, grid_size)?;
            c.grid_size = grid_size;
        }
        Ok(self)
    }

    /// Drops the analytic active solver, forcing grid clustering.
    pub fn without_active_solver(mut self) -> Self {
        if let IndexModel::Curve(c) = &mut self.model {
            c.solver = None;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &IndexModel {
        &self.model
    }

    pub fn coefficient(&self, idx: Index) -> (Vec<f64>, f64) {
        match (&self.model, idx) {
            (IndexModel::Finite(rows), Index::Row(i)) => (rows[i].0.as_slice().to_vec(), rows[i].1),
            (IndexModel::Curve(c), Index::Param(t)) => c.coefficient(t),
            _ => panic!("index {idx:?} does not match the system's index model"),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "point must be finite with dimension {}, got {}",
                self.dim,
                x.len()
            )));
        }
        Ok(())
    }

    /// `phi(x) = max_t <a_t, x> - b_t`
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.residual_unchecked(x))
    }

    pub(crate) fn residual_unchecked(&self, x: &[f64]) -> f64 {
        match &self.model {
            IndexModel::Finite(rows) => rows
                .iter()
                .map(|(a, b)| a.dot(x) - b)
                .fold(f64::NEG_INFINITY, f64::max),
            IndexModel::Curve(c) => {
                if let Some(ts) = c.solver.as_ref().and_then(|s| s(x, 0.0)) {
                    if let Some(&t) = ts.first() {
                        return c.value(x, t);
                    }
                }
                let (_, vals, refined) = c.maximize(x);
                refined
                    .iter()
                    .map(|r| r.1)
                    .chain(vals)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// `T(x)` at tolerance `tol`, relative to `1 + |phi(x)|`.
    pub fn active_indices(&self, x: &[f64], tol: f64) -> Result<ActiveIndices> {
        self.check_point(x)?;
        Ok(self.active_unchecked(x, tol))
    }

    fn active_unchecked(&self, x: &[f64], tol: f64) -> ActiveIndices {
        match &self.model {
            IndexModel::Finite(rows) => {
                let vals: Vec<f64> = rows.iter().map(|(a, b)| a.dot(x) - b).collect();
                let phi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let cut = phi - tol * (1.0 + phi.abs());
                ActiveIndices {
                    indices: (0..rows.len())
                        .filter(|&i| vals[i] >= cut)
                        .map(Index::Row)
                        .collect(),
                    method: ActiveMethod::Exact,
                    wide: None,
                }
            }
            IndexModel::Curve(c) => {
                if let Some(ts) = c.solver.as_ref().and_then(|s| s(x, tol)) {
                    let mut ts = ts;
                    ts.sort_by(f64::total_cmp);
                    ts.dedup();
                    return ActiveIndices {
                        indices: ts.into_iter().map(Index::Param).collect(),
                        method: ActiveMethod::Analytic,
                        wide: None,
                    };
                }
                let (ts, vals, refined) = c.maximize(x);
                let narrow = cluster(c, x, &ts, &vals, &refined, tol);
                let wide = cluster(c, x, &ts, &vals, &refined, 10.0 * tol);
                ActiveIndices {
                    indices: narrow.into_iter().map(Index::Param).collect(),
                    method: ActiveMethod::Clustered,
                    wide: Some(wide.into_iter().map(Index::Param).collect()),
                }
            }
        }
    }

    /// The induced max-affine function of a finite system.
    pub fn to_max_function(&self) -> Option<MaxFunction> {
        match &self.model {
            IndexModel::Finite(rows) => {
                let pieces = rows
                    .iter()
                    .map(|(a, b)| SmoothPiece::affine(a.clone(), *b))
                    .collect::<Result<Vec<_>>>()
                    .ok()?;
                MaxFunction::new(pieces).ok()
            }
            IndexModel::Curve(_) => None,
        }
    }

    /// Rows of the system (curve systems discretized on the grid), keeping
    /// only those that can be active at the projection of `x` when the
    /// feasible point `anchor` bounds the distance.
    fn rows_near(&self, x: &[f64], anchor: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let radius = distance(x, anchor);
        let rows: Vec<(Vec<f64>, f64)> = match &self.model {
            IndexModel::Finite(rows) => rows
                .iter()
                .map(|(a, b)| (a.as_slice().to_vec(), *b))
                .collect(),
            IndexModel::Curve(c) => c.grid().into_iter().map(|t| c.coefficient(t)).collect(),
        };
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for (a, b) in rows {
            let an = norm(&a);
            if an == 0.0 {
                if b < 0.0 {
                    return Err(Error::LikelyInfeasible);
                }
                continue;
            }
            if dot(&a, x) - b > -an * radius * (1.0 + 1e-9) {
                normals.push(a);
                offsets.push(b);
            }
        }
        Ok((normals, offsets))
    }

    /// `d(x, [phi <= 0])` over the (discretized) halfspaces.
    ///
    /// `anchor` must be feasible; it bounds the distance, prunes constraints
    /// that cannot matter and starts the active-set projection.
    pub fn feasible_distance(&self, x: &[f64], anchor: &[f64]) -> Result<FeasibleDistance> {
        self.check_point(x)?;
        self.check_point(anchor)?;
        let (normals, offsets) = self.rows_near(x, anchor)?;
        if self.residual_unchecked(x) <= 0.0 || normals.is_empty() {
            return Ok(FeasibleDistance {
                distance: 0.0,
                point: Vector::new(x.to_vec())?,
                residual: self.residual_unchecked(x),
            });
        }
        // the anchor may sit on the boundary up to rounding; pull it onto the discretized set
        let slack: Vec<f64> = normals
            .iter()
            .zip(&offsets)
            .map(|(a, b)| b - dot(a, anchor))
            .collect();
        let start: Vec<f64> = if slack.iter().all(|&s| s >= 0.0) {
            anchor.to_vec()
        } else {
            let offsets: Vec<f64> = offsets
                .iter()
                .zip(&slack)
                .map(|(b, s)| b - s.min(0.0))
                .collect();
            return self.project_rows(&normals, &offsets, x, anchor);
        };
        self.project_rows(&normals, &offsets, x, &start)
    }

    fn project_rows(
        &self,
        normals: &[Vec<f64>],
        offsets: &[f64],
        x: &[f64],
        start: &[f64],
    ) -> Result<FeasibleDistance> {
        let proj = project_polyhedron(normals, offsets, x, start)?;
        let residual = self.residual_unchecked(&proj.point);
        Ok(FeasibleDistance {
            distance: proj.distance,
            point: proj.point,
            residual,
        })
    }
}

fn check_range(t0: f64, t1: f64, grid_size: usize) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::input(format!(
            "parameter range [{t0}, {t1}] must satisfy t0 < t1"
        )));
    }
    if grid_size < 2 {
        return Err(Error::input("curve grid needs at least two intervals"));
    }
    Ok(())
}

/// Cluster representatives of the near-maximal grid points and refined maxima.
fn cluster(
    c: &Curve,
    x: &[f64],
    ts: &[f64],
    vals: &[f64],
    refined: &[(f64, f64)],
    tol: f64,
) -> Vec<f64> {
    let phi = refined
        .iter()
        .map(|r| r.1)
        .chain(vals.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let cut = phi - tol * (1.0 + phi.abs());
    let mut cands: Vec<f64> = ts
        .iter()
        .zip(vals)
        .filter(|(_, &v)| v >= cut)
        .map(|(&t, _)| t)
        .chain(refined.iter().filter(|r| r.1 >= cut).map(|r| r.0))
        .collect();
    cands.sort_by(f64::total_cmp);
    let h = c.step();
    let mut reps = Vec::new();
    let mut start = 0;
    for i in 1..=cands.len() {
        if i == cands.len() || cands[i] - cands[i - 1] >= 2.0 * h {
            let lo = (cands[start] - h).max(c.t0);
            let hi = (cands[i - 1] + h).min(c.t1);
            reps.push(golden_max(|t| c.value(x, t), lo, hi).0);
            start = i;
        }
    }
    reps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveMethod {
    /// Finite system: exact comparison of row residuals.
    Exact,
    /// Closed-form solver attached to a curve system.
    Analytic,
    /// Grid clustering with golden-section representatives.
    Clustered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveIndices {
    pub indices: Vec<Index>,
    pub method: ActiveMethod,
    /// Clustered active set at ten times the tolerance, for sensitivity reports.
    pub wide: Option<Vec<Index>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleDistance {
    pub distance: f64,
    /// Projection onto the discretized feasible set.
    pub point: Vector,
    /// Exact residual at the projected point; positive values measure discretization error.
    pub residual: f64,
}

/// The collection of active-index subsets exposing faces of the active coefficient hull.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexCollection {
    pub active: ActiveIndices,
    /// Distinct active coefficient vectors (coincident `a_t` merged).
    pub gradients: PointSet,
    /// Active indices sharing each coefficient vector.
    pub groups: Vec<Vec<Index>>,
    pub faces: FaceCollection,
    /// Index sets of the faces, in face order.
    pub sets: Vec<Vec<Index>>,
}

/// Merges indices whose coefficient vectors agree within `eq_tol (1 + |a|)`.
fn group_coefficients(
    sys: &LinearSystem,
    indices: &[Index],
    tol: &Tolerances,
) -> Result<(PointSet, Vec<Vec<Index>>)> {
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut groups: Vec<Vec<Index>> = Vec::new();
    for &idx in indices {
        let (a, _) = sys.coefficient(idx);
        match reps
            .iter()
            .position(|r| distance(r, &a) <= tol.eq_tol * (1.0 + norm(r)))
        {
            Some(k) => groups[k].push(idx),
            None => {
                reps.push(a);
                groups.push(vec![idx]);
            }
        }
    }
    let pts = reps
        .into_iter()
        .map(Vector::new)
        .collect::<Result<Vec<_>>>()?;
    Ok((PointSet::new(pts)?, groups))
}

pub fn index_collection(
    sys: &LinearSystem,
    x: &[f64],
    tol: &Tolerances,
) -> Result<IndexCollection> {
    let active = sys.active_indices(x, tol.active_tol)?;
    let (gradients, groups) = group_coefficients(sys, &active.indices, tol)?;
    let faces = face_collection(&gradients, FaceMode::Enumerate, tol)?;
    let sets = faces
        .faces
        .iter()
        .map(|f| {
            let mut s: Vec<Index> = f
                .indices
                .iter()
                .flat_map(|&g| groups[g].iter().copied())
                .collect();
            s.sort_by(|p, q| p.partial_cmp(q).expect("finite indices"));
            s
        })
        .collect();
    Ok(IndexCollection {
        active,
        gradients,
        groups,
        faces,
        sets,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusFormula {
    /// `+inf` when the collection is empty.
    pub value: f64,
    pub set: Option<Vec<Index>>,
    pub nearest: Option<MinNormResult>,
    pub collection: IndexCollection,
}

/// `min` over the index collection of `d(0, co{a_t : t in T'})`: the exact
/// modulus under the regularity condition, an upper estimate otherwise.
pub fn modulus_formula(sys: &LinearSystem, x: &[f64], tol: &Tolerances) -> Result<ModulusFormula> {
    let collection = index_collection(sys, x, tol)?;
    let best = end_set_distance_over(&collection.gradients, collection.faces.clone(), tol)?;
    let set = best.face.as_ref().map(|f| {
        let k = collection
            .faces
            .faces
            .iter()
            .position(|g| g.indices == f.indices)
            .expect("face comes from the collection");
        collection.sets[k].clone()
    });
    Ok(ModulusFormula {
        value: best.distance,
        set,
        nearest: best.nearest,
        collection,
    })
}

/// Sampled distance from the origin to the outer limiting subdifferential of the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LinsysLower {
    pub distance: f64,
    pub set: Option<Vec<Index>>,
    pub nearest: Option<MinNormResult>,
    /// Collected index sets, sorted.
    pub sets: Vec<Vec<Index>>,
    pub positive_samples: usize,
    pub diagnostic: Option<String>,
}

/// Finite systems go through the induced max-affine function. Curve systems
/// collect the clustered active sets at samples with positive residual on the
/// innermost `ceil(m/3)` shells; each sampled parameter is replaced by the
/// nearest element of `T(xbar)`, where all limits of active parameters lie.
pub fn lower_estimate(
    sys: &LinearSystem,
    xbar: &[f64],
    cfg: &SamplingConfig,
    tol: &Tolerances,
) -> Result<LinsysLower> {
    cfg.validate()?;
    let phi0 = sys.residual(xbar)?;
    if phi0.abs() > tol.active_tol {
        return Err(Error::input(format!(
            "base point is not on the boundary of the solution set: residual = {phi0:e}"
        )));
    }
    if let Some(phi) = sys.to_max_function() {
        let lo = maxfunc::lower_estimate(&phi, xbar, cfg, tol)?;
        let rows = |s: &[usize]| s.iter().map(|&i| Index::Row(i)).collect::<Vec<_>>();
        return Ok(LinsysLower {
            distance: lo.distance,
            set: lo.witness.as_ref().map(|w| rows(&w.0)),
            nearest: lo.witness.map(|w| w.1),
            sets: lo.collection.index_sets.iter().map(|s| rows(s)).collect(),
            positive_samples: lo.collection.positive_samples,
            diagnostic: lo.diagnostic,
        });
    }
    let base: Vec<f64> = sys
        .active_unchecked(xbar, tol.active_tol)
        .indices
        .iter()
        .filter_map(|i| match i {
            Index::Param(t) => Some(*t),
            Index::Row(_) => None,
        })
        .collect();
    let radii = cfg.radii();
    let tail = &radii[radii.len() - cfg.tail_len()..];
    let dirs = cfg.unit_directions(sys.dim);
    let samples: Vec<Option<Vec<f64>>> = tail
        .iter()
        .flat_map(|&r| dirs.iter().map(move |u| (r, u)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(r, u)| {
            let x = u.scaled(r).add(xbar);
            if sys.residual_unchecked(&x) <= 0.0 {
                return None;
            }
            let mut snapped: Vec<f64> = sys
                .active_unchecked(&x, tol.active_tol * r)
                .indices
                .iter()
                .filter_map(|i| match i {
                    Index::Param(t) => base
                        .iter()
                        .copied()
                        .min_by(|p, q| (p - t).abs().total_cmp(&(q - t).abs())),
                    Index::Row(_) => None,
                })
                .collect();
            snapped.sort_by(f64::total_cmp);
            snapped.dedup();
            Some(snapped)
        })
        .collect();
    let positive = samples.iter().filter(|s| s.is_some()).count();
    let mut sets: Vec<Vec<f64>> = samples
        .into_iter()
        .flatten()
        .filter(|s| !s.is_empty())
        .collect();
    sets.sort_by(|p, q| p.partial_cmp(q).expect("finite parameters"));
    sets.dedup();

    let mut best: Option<(f64, Vec<f64>, MinNormResult)> = None;
    for set in &sets {
        let pts = set
            .iter()
            .map(|&t| Vector::new(sys.coefficient(Index::Param(t)).0))
            .collect::<Result<Vec<_>>>()?;
        let r = min_norm_point(&PointSet::new(pts)?, tol)?;
        if best.as_ref().is_none_or(|b| r.distance < b.0) {
            best = Some((r.distance, set.clone(), r));
        }
    }
    let params = |s: &[f64]| s.iter().map(|&t| Index::Param(t)).collect::<Vec<_>>();
    let all: Vec<Vec<Index>> = sets.iter().map(|s| params(s)).collect();
    Ok(match best {
        Some((d, set, r)) => LinsysLower {
            distance: d,
            set: Some(params(&set)),
            nearest: Some(r),
            sets: all,
            positive_samples: positive,
            diagnostic: None,
        },
        None => LinsysLower {
            distance: f64::INFINITY,
            set: None,
            nearest: None,
            sets: all,
            positive_samples: positive,
            diagnostic: Some("no sample with positive residual on the innermost shells".into()),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// Feasible set locally equal to the point plus the linearized cone.
    LocallyPolyhedral,
    /// Linearized cone equal to the tangent cone.
    Acq,
    /// Exactness of the tangent approximation at the point.
    Eta,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::LocallyPolyhedral => "locally_polyhedral",
            ProbeKind::Acq => "acq",
            ProbeKind::Eta => "eta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub samples: usize,
    /// Step lengths tested along each direction.
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(kind: ProbeKind) -> Self {
        ProbeConfig {
            kind,
            samples: 256,
            epsilons: vec![0.1, 0.03, 0.01],
            seed: 0,
        }
    }
}

/// A direction in the linearized cone along which the probed equality fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub base: Vector,
    pub direction: Vector,
    pub epsilon: f64,
    pub point: Vector,
    /// Residual at `point` (feasibility probes) or `d(point, F) / epsilon` (ACQ probe).
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Not a proof: only the listed number of directions was tested.
    NoCounterexample {
        tested: usize,
    },
    Counterexample(Counterexample),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityProbe {
    pub kind: ProbeKind,
    pub samples: usize,
    pub epsilons: Vec<f64>,
    pub verdict: Verdict,
}

impl RegularityProbe {
    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.verdict {
            Verdict::Counterexample(c) => Some(c),
            Verdict::NoCounterexample { .. } => None,
        }
    }
}

/// Feasibility threshold used by the probes.
fn infeasible(sys: &LinearSystem, x: &[f64], tol: &Tolerances) -> Option<f64> {
    let r = sys.residual_unchecked(x);
    (r > tol.active_tol * (1.0 + norm(x))).then_some(r)
}

impl Counterexample {
    /// Re-checks the counterexample against the raw residual: the direction
    /// lies in the linearized cone at the base point and the stated point
    /// fails the probed condition.
    pub fn verify(&self, sys: &LinearSystem, kind: ProbeKind, tol: &Tolerances) -> Result<bool> {
        let active = sys.active_indices(&self.base, tol.active_tol)?;
        let in_cone = active.indices.iter().all(|&i| {
            let (a, _) = sys.coefficient(i);
            dot(&a, &self.direction) <= 1e-9 * (1.0 + norm(&a))
        });
        let expected = self.direction.scaled(self.epsilon).add(&self.base);
        if !in_cone || distance(&expected, &self.point) > 1e-12 * (1.0 + norm(&expected)) {
            return Ok(false);
        }
        Ok(match kind {
            ProbeKind::LocallyPolyhedral | ProbeKind::Eta => {
                infeasible(sys, &self.point, tol).is_some()
            }
            ProbeKind::Acq => {
                let d = sys.feasible_distance(&self.point, &self.base)?;
                d.distance / self.epsilon > 1e-6
            }
        })
    }
}

/// Falsification probe for the regularity conditions at a feasible point.
///
/// Candidate unit directions are projected onto the linearized cone
/// `{w : <a_t, w> <= 0, t in T(x)}`. The feasibility probes report a
/// direction whose every tested step leaves the feasible set; the ACQ probe
/// reports one whose distance ratio `d(x + eps w, F) / eps` does not decay
/// as `eps` shrinks.
pub fn regularity_probe(
    sys: &LinearSystem,
    x: &[f64],
    cfg: &ProbeConfig,
    tol: &Tolerances,
) -> Result<RegularityProbe> {
    if cfg.epsilons.is_empty() || cfg.epsilons.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::input("probe step lengths must be positive"));
    }
    let r = sys.residual(x)?;
    if r > tol.active_tol {
        return Err(Error::input(format!(
            "probe point is infeasible: residual = {r:e}"
        )));
    }
    let active = sys.active_unchecked(x, tol.active_tol);
    let (grads, _) = group_coefficients(sys, &active.indices, tol)?;
    let cone: Vec<ConvexPiece> = grads
        .iter()
        .filter(|a| !a.is_zero())
        .map(|a| ConvexPiece::halfspace(a.clone(), 0.0))
        .collect::<Result<_>>()?;
    let mut eps = cfg.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    if cfg.kind == ProbeKind::Acq {
        let smallest = eps[eps.len() - 1];
        eps.extend([smallest / 10.0, smallest / 100.0]);
    }
    let candidates = unit_directions(sys.dim, cfg.samples.max(1), cfg.samples / 16, cfg.seed);
    let xv = Vector::new(x.to_vec())?;
    let mut tested = 0;
    for u in candidates {
        let w = if cone.is_empty() {
            u
        } else {
            let p = project_intersection_with(
                &cone,
                &u,
                DykstraConfig {
                    tol: 1e-12,
                    max_cycles: 20_000,
                },
            )?;
            let n = p.point.norm();
            if n < 1e-9 {
                continue;
            }
            p.point.scaled(1.0 / n)
        };
        tested += 1;
        let found = match cfg.kind {
            ProbeKind::LocallyPolyhedral | ProbeKind::Eta => {
                let mut last = None;
                let mut all = true;
                for &e in &eps {
                    let y = w.scaled(e).add(x);
                    match infeasible(sys, &y, tol) {
                        Some(res) => last = Some((e, y, res)),
                        None => {
                            all = false;
                            break;
                        }
                    }
                }
                if all {
                    last
                } else {
                    None
                }
            }
            ProbeKind::Acq => {
                let mut ratios = Vec::with_capacity(eps.len());
                for &e in &eps {
                    let y = w.scaled(e).add(x);
                    let d = sys.feasible_distance(&y, x)?;
                    ratios.push((e, y, d.distance / e));
                }
                let first = ratios[0].2;
                let last = ratios.pop().expect("nonempty");
                (ratios.iter().all(|r| r.2 > 1e-6) && last.2 > 1e-6 && last.2 >= 0.5 * first)
                    .then_some(last)
            }
        };
        if let Some((e, y, measure)) = found {
            return Ok(RegularityProbe {
                kind: cfg.kind,
                samples: cfg.samples,
                epsilons: eps,
                verdict: Verdict::Counterexample(Counterexample {
                    base: xv,
                    direction: w,
                    epsilon: e,
                    point: y,
                    measure,
                }),
            });
        }
    }
    Ok(RegularityProbe {
        kind: cfg.kind,
        samples: cfg.samples,
        epsilons: eps,
        verdict: Verdict::NoCounterexample { tested },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{circle_unit, circle_weighted};
    use std::f64::consts::TAU;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn box_system() -> LinearSystem {
        LinearSystem::finite(vec![(v(&[1.0, 0.0]), 1.0), (v(&[0.0, 1.0]), 1.0)]).unwrap()
    }

    fn params(a: &ActiveIndices) -> Vec<f64> {
        a.indices
            .iter()
            .map(|i| match i {
                Index::Param(t) => *t,
                Index::Row(_) => panic!("row index on a curve"),
            })
            .collect()
    }

    #[test]
    fn residual_examples() {
        let eps = 1e-3;
        let r = circle_unit().residual(&[1.0 + eps, 0.0]).unwrap();
        assert!((r - eps).abs() < 1e-12);
        // dense grid oracle
        let grid = (0..=100_000)
            .map(|k| {
                let t = TAU * k as f64 / 1e5;
                (1.0 + eps) * t.cos() - 1.0
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((r - grid).abs() < 1e-12);
        assert_eq!(circle_weighted().residual(&[1.0, 0.0]).unwrap(), 0.0);
        let one = LinearSystem::finite(vec![(v(&[1.0, 0.0]), 1.0)]).unwrap();
        assert_eq!(one.residual(&[3.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn generic_grid_residual_agrees_with_analytic() {
        let sys = circle_unit().without_active_solver();
        for x in [[1.2, 0.3], [-0.4, 0.9], [0.3, -1.7]] {
            let exact = norm(&x) - 1.0;
            assert!((sys.residual(&x).unwrap() - exact).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn active_indices_examples() {
        let a = circle_weighted().active_indices(&[1.0, 0.0], 1e-8).unwrap();
        assert_eq!(a.method, ActiveMethod::Analytic);
        let t = params(&a);
        assert_eq!(t.len(), 2);
        assert!(t[0].abs() < 1e-9 && (t[1] - TAU).abs() < 1e-9);

        let t = params(&circle_unit().active_indices(&[1.0, 0.0], 1e-8).unwrap());
        assert!(t.len() == 2 && t[0].abs() < 1e-9 && (t[1] - TAU).abs() < 1e-9);

        let a = box_system().active_indices(&[1.0, 0.0], 1e-8).unwrap();
        assert_eq!(a.indices, vec![Index::Row(0)]);
    }

    #[test]
    fn clustering_recovers_endpoints_without_solver() {
        for sys in [circle_weighted(), circle_unit()] {
            let a = sys
                .without_active_solver()
                .active_indices(&[1.0, 0.0], 1e-8)
                .unwrap();
            assert_eq!(a.method, ActiveMethod::Clustered);
            let t = params(&a);
            assert_eq!(t.len(), 2, "{t:?}");
            assert!(t[0].abs() < 1e-9 && (t[1] - TAU).abs() < 1e-9, "{t:?}");
            assert!(a.wide.is_some());
        }
    }

    #[test]
    fn clustering_is_stable_under_grid_refinement() {
        let x = [0.6, 0.8];
        for sys in [circle_weighted(), circle_unit()] {
            let coarse = sys
                .clone()
                .without_active_solver()
                .with_grid_size(1024)
                .unwrap();
            let fine = sys.without_active_solver().with_grid_size(2048).unwrap();
            let a = params(&coarse.active_indices(&x, 1e-8).unwrap());
            let b = params(&fine.active_indices(&x, 1e-8).unwrap());
            assert_eq!(a.len(), b.len());
            let step = TAU / 1024.0;
            assert!(
                a.iter().zip(&b).all(|(p, q)| (p - q).abs() < step),
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn index_collection_examples() {
        let c = index_collection(&circle_weighted(), &[1.0, 0.0], &tol()).unwrap();
        assert_eq!(c.sets.len(), 1);
        assert!(matches!(c.sets[0][..], [Index::Param(t)] if (t - TAU).abs() < 1e-9));

        let c = index_collection(&circle_unit(), &[1.0, 0.0], &tol()).unwrap();
        assert_eq!(c.sets.len(), 1);
        assert!(
            matches!(c.sets[0][..], [Index::Param(a), Index::Param(b)] if a.abs() < 1e-9 && (b - TAU).abs() < 1e-9)
        );

        let one = LinearSystem::finite(vec![(v(&[1.0, 0.0]), 1.0)]).unwrap();
        let c = index_collection(&one, &[1.0, 5.0], &tol()).unwrap();
        assert_eq!(c.sets, vec![vec![Index::Row(0)]]);
    }

    #[test]
    fn modulus_formula_examples() {
        let m = modulus_formula(&circle_weighted(), &[1.0, 0.0], &tol()).unwrap();
        assert!((m.value - TAU).abs() < 1e-9);
        let m = modulus_formula(&circle_unit(), &[1.0, 0.0], &tol()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9);
        let one = LinearSystem::finite(vec![(v(&[1.0, 0.0]), 1.0)]).unwrap();
        assert!((modulus_formula(&one, &[1.0, 0.0], &tol()).unwrap().value - 1.0).abs() < 1e-15);
        let m = modulus_formula(&box_system(), &[1.0, 1.0], &tol()).unwrap();
        assert_eq!(m.collection.sets.len(), 3);
        assert!((m.value - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn finite_systems_match_max_affine_upper_estimate() {
        let systems = [
            (box_system(), vec![1.0, 1.0]),
            (
                LinearSystem::finite(vec![
                    (v(&[1.0, 2.0]), 3.0),
                    (v(&[2.0, 1.0]), 3.0),
                    (v(&[-1.0, 0.0]), 0.0),
                ])
                .unwrap(),
                vec![1.0, 1.0],
            ),
        ];
        for (sys, x) in systems {
            let formula = modulus_formula(&sys, &x, &tol()).unwrap().value;
            let phi = sys.to_max_function().unwrap();
            let upper = maxfunc::upper_estimate(&phi, &x, &tol()).unwrap().distance;
            assert!((formula - upper).abs() < 1e-9);
        }
    }

    #[test]
    fn lower_estimates_on_curves() {
        let cfg = SamplingConfig::default();
        let lo = lower_estimate(&circle_unit(), &[1.0, 0.0], &cfg, &tol()).unwrap();
        assert!((lo.distance - 1.0).abs() < 1e-3, "{lo:?}");
        assert!(lo.sets.iter().all(|s| {
            let pts: Vec<Vector> = s
                .iter()
                .map(|&i| v(&circle_unit().coefficient(i).0))
                .collect();
            (min_norm_point(&PointSet::new(pts).unwrap(), &tol())
                .unwrap()
                .distance
                - 1.0)
                .abs()
                < 1e-3
        }));
        let lo = lower_estimate(&circle_weighted(), &[1.0, 0.0], &cfg, &tol()).unwrap();
        assert!(lo.distance < 1e-9, "{lo:?}");
    }

    #[test]
    fn probes_find_counterexamples_on_curves() {
        for sys in [circle_weighted(), circle_unit()] {
            let cfg = ProbeConfig::new(ProbeKind::LocallyPolyhedral);
            let p = regularity_probe(&sys, &[1.0, 0.0], &cfg, &tol()).unwrap();
            let c = p.counterexample().expect("counterexample");
            assert!(c.verify(&sys, cfg.kind, &tol()).unwrap());
        }
        // the specific tangent direction is a counterexample for every tested step
        let sys = circle_weighted();
        for e in [0.1, 0.03, 0.01] {
            assert!(sys.residual(&[1.0, e]).unwrap() > 1e-7);
        }
    }

    #[test]
    fn probes_find_nothing_on_polyhedra() {
        for kind in [ProbeKind::LocallyPolyhedral, ProbeKind::Eta, ProbeKind::Acq] {
            let cfg = ProbeConfig {
                samples: 64,
                ..ProbeConfig::new(kind)
            };
            for x in [[1.0, 1.0], [1.0, 0.0], [0.0, 0.0]] {
                let p = regularity_probe(&box_system(), &x, &cfg, &tol()).unwrap();
                assert!(
                    matches!(p.verdict, Verdict::NoCounterexample { tested } if tested > 0),
                    "{kind:?} {x:?}"
                );
            }
        }
    }

    #[test]
    fn acq_holds_on_the_disk() {
        let cfg = ProbeConfig {
            samples: 32,
            ..ProbeConfig::new(ProbeKind::Acq)
        };
        let p = regularity_probe(&circle_unit(), &[1.0, 0.0], &cfg, &tol()).unwrap();
        assert!(p.counterexample().is_none(), "{p:?}");
    }

    #[test]
    fn feasible_distance_on_the_disk() {
        let sys = circle_unit();
        let d = sys.feasible_distance(&[1.5, 0.5], &[1.0, 0.0]).unwrap();
        let exact = norm(&[1.5, 0.5]) - 1.0;
        // discretized halfspaces give an outer approximation
        assert!(
            d.distance <= exact + 1e-9 && exact - d.distance < 1e-5,
            "{d:?}"
        );
        assert!(d.residual < 1e-5);
    }

    #[test]
    fn table_systems() {
        let ts: Vec<f64> = (0..=64).map(|k| TAU * k as f64 / 64.0).collect();
        let rows = ts.iter().map(|t| (v(&[t.cos(), t.sin()]), 1.0)).collect();
        let sys = LinearSystem::table(ts.clone(), rows, 256).unwrap();
        assert!(sys.residual(&[1.0, 0.0]).unwrap().abs() < 1e-12);
        let mut bad: Vec<(Vector, f64)> =
            ts.iter().map(|t| (v(&[t.cos(), t.sin()]), 1.0)).collect();
        bad[30].1 = 50.0;
        assert!(LinearSystem::table(ts, bad, 256).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(LinearSystem::finite(vec![]).is_err());
        assert!(LinearSystem::curve("c", 2, (1.0, 0.0), 16, |t| (vec![t, 0.0], 0.0)).is_err());
        assert!(LinearSystem::curve("c", 2, (0.0, 1.0), 16, |t| (vec![t], 0.0)).is_err());
        assert!(box_system().residual(&[1.0]).is_err());
    }
}
