//! Pointwise maxima of finitely many smooth pieces: active sets,
//! subdifferentials, the sampled limiting collection of active sets and the
//! lower/upper error-bound-modulus estimates built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::endset::{
    end_set_distance_over, face_collection, EndSetDistance, FaceCollection, FaceMode,
};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, PointSet, Tolerances, Vector};
use crate::sampling::SamplingConfig;
use crate::solvers::{min_norm_point, MinNormResult};

/// One smooth piece `f(., y)` of a max-function.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothPiece {
    /// `<a, x> - b`
    Affine { a: Vector, b: f64 },
    /// `x^T Q x + <b, x> + c` with `Q` symmetric (row-major).
    Quadratic { q: Vec<Vec<f64>>, b: Vector, c: f64 },
}

impl SmoothPiece {
    pub fn affine(a: Vector, b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::input("affine offset must be finite"));
        }
        let piece = SmoothPiece::Affine { a, b };
        piece.check_gradient()?;
        Ok(piece)
    }

    pub fn quadratic(q: Vec<Vec<f64>>, b: Vector, c: f64) -> Result<Self> {
        let n = b.dim();
        if q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(Error::input(format!("quadratic term must be {n}x{n}")));
        }
        if q.iter().flatten().any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::input("quadratic coefficients must be finite"));
        }
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i) {
                if (v - q[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::input(format!(
                        "quadratic term is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let piece = SmoothPiece::Quadratic { q, b, c };
        piece.check_gradient()?;
        Ok(piece)
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothPiece::Affine { a, .. } => a.dim(),
            SmoothPiece::Quadratic { b, .. } => b.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SmoothPiece::Affine { a, b } => a.dot(x) - b,
            SmoothPiece::Quadratic { q, b, c } => {
                let quad: f64 = q.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
                quad + b.dot(x) + c
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothPiece::Affine { a, .. } => a.as_slice().to_vec(),
            SmoothPiece::Quadratic { q, b, .. } => q
                .iter()
                .zip(b.iter())
                .map(|(row, bi)| 2.0 * dot(row, x) + bi)
                .collect(),
        }
    }

    /// Same piece multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SmoothPiece {
        match self {
            SmoothPiece::Affine { a, b } => SmoothPiece::Affine {
                a: a.scaled(factor),
                b: b * factor,
            },
            SmoothPiece::Quadratic { q, b, c } => SmoothPiece::Quadratic {
                q: q.iter()
                    .map(|r| r.iter().map(|v| v * factor).collect())
                    .collect(),
                b: b.scaled(factor),
                c: c * factor,
            },
        }
    }

    /// Largest relative error between the analytic gradient and central
    /// differences with step `1e-6 (1 + |x|)`.
    pub fn gradient_error(&self, x: &[f64]) -> f64 {
        let h = 1e-6 * (1.0 + norm(x));
        let g = self.gradient(x);
        let mut worst: f64 = 0.0;
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = self.value(&xp);
            xp[i] = x[i] - h;
            let fm = self.value(&xp);
            xp[i] = x[i];
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        }
        worst
    }

    fn check_gradient(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9d);
        for _ in 0..5 {
            let x: Vec<f64> = (0..self.dim())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let err = self.gradient_error(&x);
            if err > 1e-5 {
                return Err(Error::input(format!(
                    "gradient disagrees with finite differences at {x:?} (rel. err {err:e})"
                )));
            }
        }
        Ok(())
    }
}

/// `phi(x) = max_y f(x, y)` over a finite list of smooth pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFunction {
    pieces: Vec<SmoothPiece>,
}

impl MaxFunction {
    pub fn new(pieces: Vec<SmoothPiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::input("max-function needs at least one piece"));
        };
        let n = first.dim();
        if let Some(i) = pieces.iter().position(|p| p.dim() != n) {
            return Err(Error::input(format!(
                "piece {i} has dimension {}, expected {n}",
                pieces[i].dim()
            )));
        }
        Ok(MaxFunction { pieces })
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn pieces(&self) -> &[SmoothPiece] {
        &self.pieces
    }

    pub fn scaled(&self, factor: f64) -> MaxFunction {
        MaxFunction {
            pieces: self.pieces.iter().map(|p| p.scaled(factor)).collect(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "point has dimension {}, function has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.value(x))
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pieces with `f(x, y) >= phi(x) - tol (1 + |phi(x)|)`, ascending.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Result<Vec<usize>> {
        self.check_point(x)?;
        Ok(self.active_unchecked(x, tol))
    }

    fn active_unchecked(&self, x: &[f64], tol: f64) -> Vec<usize> {
        let values: Vec<f64> = self.pieces.iter().map(|p| p.value(x)).collect();
        let phi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut = phi - tol * (1.0 + phi.abs());
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= cut)
            .map(|(i, _)| i)
            .collect()
    }

    /// Gradients at `x` of the pieces in `indices`.
    pub fn gradients(&self, x: &[f64], indices: &[usize]) -> Result<PointSet> {
        self.check_point(x)?;
        let pts = indices
            .iter()
            .map(|&i| Vector::new(self.pieces[i].gradient(x)))
            .collect::<Result<Vec<_>>>()?;
        let labels = indices.iter().map(|i| format!("piece {i}")).collect();
        PointSet::with_labels(pts, labels)
    }

    /// Generators of the Clarke subdifferential at `x`: gradients of the active pieces.
    pub fn subdifferential(&self, x: &[f64], tol: &Tolerances) -> Result<PointSet> {
        let active = self.active_set(x, tol.active_tol)?;
        self.gradients(x, &active)
    }

    /// Active pieces together with their gradients, grouping pieces whose
    /// gradients coincide (the point set deduplicates them).
    fn active_gradient_groups(
        &self,
        x: &[f64],
        tol: &Tolerances,
    ) -> Result<(PointSet, Vec<Vec<usize>>)> {
        let active = self.active_set(x, tol.active_tol)?;
        let grads = self.gradients(x, &active)?;
        let mut groups = vec![Vec::new(); grads.len()];
        for &i in &active {
            let g = self.pieces[i].gradient(x);
            let slot = grads.position(&g).expect("gradient present after dedup");
            groups[slot].push(i);
        }
        Ok((grads, groups))
    }

    fn check_boundary(&self, xbar: &[f64], tol: &Tolerances) -> Result<()> {
        let v = self.eval(xbar)?;
        if v.abs() > tol.active_tol {
            return Err(Error::input(format!(
                "base point is not on the level-set boundary: phi = {v:e}"
            )));
        }
        Ok(())
    }
}

/// Sampled approximation of the limiting active-set collection at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingCollection {
    /// Sorted piece-index sets.
    pub index_sets: Vec<Vec<usize>>,
    /// For each set, the shell radii (decreasing) at which it was observed.
    pub provenance: Vec<Vec<f64>>,
    /// Always false: sampling cannot enumerate limits of sequences.
    pub exhaustive: bool,
    /// Number of sample points with `phi > 0`.
    pub positive_samples: usize,
}

/// Samples `xbar + r u` on geometric shells and keeps the active sets at
/// points with `phi > 0` that persist along one direction over the innermost
/// `ceil(m/3)` shells.
///
/// Active sets at a sample on shell `r` use the tolerance `active_tol * r`, so
/// that pieces separated by `O(r)` in value are not merged on small shells.
pub fn limiting_collection(
    phi: &MaxFunction,
    xbar: &[f64],
    cfg: &SamplingConfig,
    tol: &Tolerances,
) -> Result<LimitingCollection> {
    cfg.validate()?;
    phi.check_boundary(xbar, tol)?;
    let radii = cfg.radii();
    let tail = cfg.tail_len();
    let first_tail = radii.len() - tail;
    let dirs = cfg.unit_directions(phi.dim());

    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut provenance: Vec<Vec<f64>> = Vec::new();
    let mut positive = 0;
    for u in &dirs {
        let per_shell: Vec<Option<Vec<usize>>> = radii
            .iter()
            .map(|&r| {
                let x = u.scaled(r).add(xbar);
                if phi.value(&x) > 0.0 {
                    Some(phi.active_unchecked(&x, tol.active_tol * r))
                } else {
                    None
                }
            })
            .collect();
        positive += per_shell.iter().filter(|s| s.is_some()).count();
        let Some(Some(candidate)) = per_shell.get(first_tail) else {
            continue;
        };
        let persists = per_shell[first_tail..]
            .iter()
            .all(|s| s.as_ref() == Some(candidate));
        if !persists {
            continue;
        }
        let seen: Vec<f64> = radii
            .iter()
            .zip(&per_shell)
            .filter(|(_, s)| s.as_ref() == Some(candidate))
            .map(|(&r, _)| r)
            .collect();
        match sets.iter().position(|s| s == candidate) {
            Some(k) => {
                for r in seen {
                    if !provenance[k].contains(&r) {
                        provenance[k].push(r);
                    }
                }
            }
            None => {
                sets.push(candidate.clone());
                provenance.push(seen);
            }
        }
    }
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&i, &j| sets[i].cmp(&sets[j]));
    Ok(LimitingCollection {
        index_sets: order.iter().map(|&i| sets[i].clone()).collect(),
        provenance: order
            .iter()
            .map(|&i| {
                let mut p = provenance[i].clone();
                p.sort_by(|a, b| b.total_cmp(a));
                p
            })
            .collect(),
        exhaustive: false,
        positive_samples: positive,
    })
}

/// Distance from the origin to the sampled outer limiting subdifferential.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerEstimate {
    /// `+inf` when no persistent active set was found.
    pub distance: f64,
    /// Minimizing index set and its min-norm point (weights over that set's gradients).
    pub witness: Option<(Vec<usize>, MinNormResult)>,
    /// Unit direction `p / |p|` from the min-norm point `p`, when `p != 0`.
    pub direction: Option<Vector>,
    pub collection: LimitingCollection,
    pub diagnostic: Option<String>,
}

/// `min` over collected index sets `Y'` of `d(0, co{grad f(xbar, y) : y in Y'})`,
/// gradients taken at the base point.
pub fn lower_estimate(
    phi: &MaxFunction,
    xbar: &[f64],
    cfg: &SamplingConfig,
    tol: &Tolerances,
) -> Result<LowerEstimate> {
    let collection = limiting_collection(phi, xbar, cfg, tol)?;
    let mut best: Option<(Vec<usize>, MinNormResult)> = None;
    for set in &collection.index_sets {
        let grads = phi.gradients(xbar, set)?;
        let r = min_norm_point(&grads, tol)?;
        if best.as_ref().is_none_or(|b| r.distance < b.1.distance) {
            // weights are over the deduplicated gradient set; map back onto the index set
            let mut weights = vec![0.0; set.len()];
            for (k, &piece) in set.iter().enumerate() {
                let g = phi.pieces[piece].gradient(xbar);
                if let Some(slot) = grads.position(&g) {
                    if !set[..k]
                        .iter()
                        .any(|&prev| phi.pieces[prev].gradient(xbar) == g)
                    {
                        weights[k] = r.weights[slot];
                    }
                }
            }
            best = Some((set.clone(), MinNormResult { weights, ..r }));
        }
    }
    Ok(match best {
        Some((set, r)) => {
            let direction = (r.distance > 0.0).then(|| r.point.scaled(1.0 / r.distance));
            LowerEstimate {
                distance: r.distance,
                witness: Some((set, r)),
                direction,
                collection,
                diagnostic: None,
            }
        }
        None => {
            let diagnostic = if collection.positive_samples == 0 {
                "no sample with phi > 0 on any shell; the base point may be interior to the level set"
            } else {
                "no active set persisted over the innermost shells; refine the sampling"
            };
            LowerEstimate {
                distance: f64::INFINITY,
                witness: None,
                direction: None,
                collection,
                diagnostic: Some(diagnostic.to_string()),
            }
        }
    })
}

/// Exposed faces of the subdifferential with positive support, as piece sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposedCollection {
    /// Distinct active gradients at the base point.
    pub gradients: PointSet,
    /// Pieces sharing each gradient.
    pub groups: Vec<Vec<usize>>,
    pub faces: FaceCollection,
    /// Piece sets of the faces, in face order.
    pub piece_sets: Vec<Vec<usize>>,
}

pub fn exposed_collection(
    phi: &MaxFunction,
    xbar: &[f64],
    tol: &Tolerances,
) -> Result<ExposedCollection> {
    let (gradients, groups) = phi.active_gradient_groups(xbar, tol)?;
    let faces = face_collection(&gradients, FaceMode::Enumerate, tol)?;
    let piece_sets = faces
        .faces
        .iter()
        .map(|f| {
            let mut s: Vec<usize> = f
                .indices
                .iter()
                .flat_map(|&g| groups[g].iter().copied())
                .collect();
            s.sort_unstable();
            s
        })
        .collect();
    Ok(ExposedCollection {
        gradients,
        groups,
        faces,
        piece_sets,
    })
}

/// Distance from the origin to the end set of the subdifferential at the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperEstimate {
    pub distance: f64,
    pub exposed: ExposedCollection,
    pub end_set: EndSetDistance,
    /// Pieces of the minimizing face.
    pub pieces: Option<Vec<usize>>,
}

pub fn upper_estimate(phi: &MaxFunction, xbar: &[f64], tol: &Tolerances) -> Result<UpperEstimate> {
    let exposed = exposed_collection(phi, xbar, tol)?;
    let end_set = end_set_distance_over(&exposed.gradients, exposed.faces.clone(), tol)?;
    let pieces = end_set.face.as_ref().map(|f| {
        let k = exposed
            .faces
            .faces
            .iter()
            .position(|g| g.indices == f.indices)
            .expect("face comes from the collection");
        exposed.piece_sets[k].clone()
    });
    Ok(UpperEstimate {
        distance: end_set.distance,
        exposed,
        end_set,
        pieces,
    })
}

/// Empirical look at whether each exposed face of the subdifferential lies in
/// the sampled outer limiting subdifferential: a face is covered when its
/// piece set is contained in some collected index set.
pub fn exposed_faces_covered(
    exposed: &ExposedCollection,
    collection: &LimitingCollection,
) -> Vec<bool> {
    exposed
        .piece_sets
        .iter()
        .map(|face| {
            collection
                .index_sets
                .iter()
                .any(|set| face.iter().all(|p| set.contains(p)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::max_quad_affine;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn orthant_max() -> MaxFunction {
        MaxFunction::new(vec![
            SmoothPiece::affine(v(&[1.0, 0.0]), 0.0).unwrap(),
            SmoothPiece::affine(v(&[0.0, 1.0]), 0.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let phi = max_quad_affine();
        assert_eq!(phi.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(phi.eval(&[1.0, 1.0]).unwrap(), 3.0);
        let single =
            MaxFunction::new(vec![SmoothPiece::affine(v(&[2.0, -1.0]), 0.5).unwrap()]).unwrap();
        assert_eq!(single.eval(&[1.0, 3.0]).unwrap(), 2.0 - 3.0 - 0.5);
        assert!(phi.eval(&[1.0]).is_err());
    }

    #[test]
    fn active_set_examples() {
        let phi = max_quad_affine();
        assert_eq!(phi.active_set(&[0.0, 0.0], 1e-8).unwrap(), vec![0, 1]);
        assert_eq!(phi.active_set(&[1.0, 1.0], 1e-8).unwrap(), vec![0]);
        let single = MaxFunction::new(vec![SmoothPiece::affine(v(&[1.0]), 0.0).unwrap()]).unwrap();
        assert_eq!(single.active_set(&[-4.0], 1e-8).unwrap(), vec![0]);
    }

    #[test]
    fn subdifferential_examples() {
        let phi = max_quad_affine();
        let d = phi.subdifferential(&[0.0, 0.0], &tol()).unwrap();
        assert_eq!(
            d.points(),
            PointSet::from_rows(&[[0.5, 0.5], [1.0, 1.0]])
                .unwrap()
                .points()
        );
        let d = phi.subdifferential(&[1.0, 1.0], &tol()).unwrap();
        assert_eq!(
            d.points(),
            PointSet::from_rows(&[[2.5, 2.5]]).unwrap().points()
        );
        let single =
            MaxFunction::new(vec![SmoothPiece::affine(v(&[3.0, 4.0]), 1.0).unwrap()]).unwrap();
        let d = single.subdifferential(&[7.0, -2.0], &tol()).unwrap();
        assert_eq!(d.points()[0].as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn quadratic_validation() {
        let asym =
            SmoothPiece::quadratic(vec![vec![1.0, 2.0], vec![0.0, 1.0]], v(&[0.0, 0.0]), 0.0);
        assert!(asym.is_err());
        let wrong = SmoothPiece::quadratic(vec![vec![1.0]], v(&[0.0, 0.0]), 0.0);
        assert!(wrong.is_err());
        assert!(MaxFunction::new(vec![]).is_err());
    }

    #[test]
    fn limiting_collection_of_quad_affine() {
        let phi = max_quad_affine();
        let c = limiting_collection(&phi, &[0.0, 0.0], &SamplingConfig::default(), &tol()).unwrap();
        assert!(!c.exhaustive);
        assert!(c.index_sets.contains(&vec![1]), "{:?}", c.index_sets);
        assert!(
            c.index_sets.iter().any(|s| s.contains(&0)),
            "{:?}",
            c.index_sets
        );
        let outer = phi
            .active_set(&[0.0, 0.0], 10.0 * tol().active_tol)
            .unwrap();
        assert!(c
            .index_sets
            .iter()
            .all(|s| s.iter().all(|i| outer.contains(i))));
    }

    #[test]
    fn limiting_collection_requires_boundary_point() {
        let phi = max_quad_affine();
        let err =
            limiting_collection(&phi, &[1.0, 1.0], &SamplingConfig::default(), &tol()).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn single_affine_piece_estimates() {
        let phi =
            MaxFunction::new(vec![SmoothPiece::affine(v(&[3.0, 4.0]), 0.0).unwrap()]).unwrap();
        let c = limiting_collection(&phi, &[0.0, 0.0], &SamplingConfig::default(), &tol()).unwrap();
        assert_eq!(c.index_sets, vec![vec![0]]);
        let lo = lower_estimate(&phi, &[0.0, 0.0], &SamplingConfig::default(), &tol()).unwrap();
        assert!((lo.distance - 5.0).abs() < 1e-12);
        let dir = lo.direction.unwrap();
        assert!((dir[0] - 0.6).abs() < 1e-12 && (dir[1] - 0.8).abs() < 1e-12);
        let up = upper_estimate(&phi, &[0.0, 0.0], &tol()).unwrap();
        assert!((up.distance - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quad_affine_estimates() {
        let phi = max_quad_affine();
        let lo = lower_estimate(&phi, &[0.0, 0.0], &SamplingConfig::default(), &tol()).unwrap();
        assert!((lo.distance - 0.5f64.sqrt()).abs() < 1e-6, "{lo:?}");
        let up = upper_estimate(&phi, &[0.0, 0.0], &tol()).unwrap();
        assert!((up.distance - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(up.exposed.piece_sets, vec![vec![1]]);
        assert_eq!(up.pieces, Some(vec![1]));
    }

    #[test]
    fn orthant_max_is_exact() {
        // polyhedral and convex: both estimates coincide
        let phi = orthant_max();
        let cfg = SamplingConfig::default();
        let c = limiting_collection(&phi, &[0.0, 0.0], &cfg, &tol()).unwrap();
        assert_eq!(c.index_sets, vec![vec![0], vec![0, 1], vec![1]]);
        let lo = lower_estimate(&phi, &[0.0, 0.0], &cfg, &tol()).unwrap();
        let up = upper_estimate(&phi, &[0.0, 0.0], &tol()).unwrap();
        assert!((lo.distance - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((lo.distance - up.distance).abs() < 1e-6);
    }

    #[test]
    fn interior_point_reports_infinite_lower_estimate() {
        // phi = -|x|^2 is never positive
        let phi = MaxFunction::new(vec![SmoothPiece::quadratic(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            v(&[0.0, 0.0]),
            0.0,
        )
        .unwrap()])
        .unwrap();
        let lo = lower_estimate(&phi, &[0.0, 0.0], &SamplingConfig::default(), &tol()).unwrap();
        assert_eq!(lo.distance, f64::INFINITY);
        assert!(lo.diagnostic.is_some());
    }

    #[test]
    fn scaling_doubles_estimates_and_keeps_sets() {
        for phi in [max_quad_affine(), orthant_max()] {
            let cfg = SamplingConfig::default();
            let twice = phi.scaled(2.0);
            let c1 = limiting_collection(&phi, &[0.0, 0.0], &cfg, &tol()).unwrap();
            let c2 = limiting_collection(&twice, &[0.0, 0.0], &cfg, &tol()).unwrap();
            assert_eq!(c1.index_sets, c2.index_sets);
            let l1 = lower_estimate(&phi, &[0.0, 0.0], &cfg, &tol())
                .unwrap()
                .distance;
            let l2 = lower_estimate(&twice, &[0.0, 0.0], &cfg, &tol())
                .unwrap()
                .distance;
            assert!((l2 - 2.0 * l1).abs() < 1e-6);
            let u1 = upper_estimate(&phi, &[0.0, 0.0], &tol()).unwrap().distance;
            let u2 = upper_estimate(&twice, &[0.0, 0.0], &tol())
                .unwrap()
                .distance;
            assert!((u2 - 2.0 * u1).abs() < 1e-6);
        }
    }

    #[test]
    fn exposed_faces_are_covered_on_fixtures() {
        let phi = max_quad_affine();
        let cfg = SamplingConfig::default();
        let lo = lower_estimate(&phi, &[0.0, 0.0], &cfg, &tol()).unwrap();
        let up = upper_estimate(&phi, &[0.0, 0.0], &tol()).unwrap();
        assert_eq!(
            exposed_faces_covered(&up.exposed, &lo.collection),
            vec![true]
        );
    }
}
