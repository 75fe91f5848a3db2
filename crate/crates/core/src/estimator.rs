//! Empirical error bound modulus over shrinking shells and the sandwich
//! report comparing it with the lower and upper estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::builtins::{self, Builtin};
use crate::endset::{end_set_distance, EndSetDistance, FaceMode};
use crate::error::{Error, Result};
use crate::geometry::{distance, PointSet, Tolerances, Vector};
use crate::linsys::{self, LinearSystem, LinsysLower, ModulusFormula};
use crate::maxfunc::{
    self, exposed_faces_covered, LowerEstimate, MaxFunction, SmoothPiece, UpperEstimate,
};
use crate::sampling::SamplingConfig;
use crate::solvers::{project_intersection_with, ConvexPiece, DykstraConfig};

/// Sample points used to cross-check level-set pieces against the function.
const LEVEL_SET_CHECKS: usize = 1000;

#[derive(Debug, Clone)]
pub enum ScenarioKind {
    /// Max-function with its level set described as an intersection of simple pieces.
    MaxFunction {
        phi: MaxFunction,
        level_set: Vec<ConvexPiece>,
    },
    /// Linear system, optionally with a closed-form distance to its solution set.
    LinearSystem {
        sys: LinearSystem,
        exact_distance: Option<fn(&[f64]) -> f64>,
    },
    /// The one-dimensional dyadic function, known in closed form only.
    StuWar,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    kind: ScenarioKind,
    base_point: Vector,
    name: Option<String>,
}

impl Scenario {
    /// `level_set` may be omitted when every piece has a ball or halfspace
    /// as its zero sublevel set; it is derived then.
    pub fn max_function(
        phi: MaxFunction,
        level_set: Option<Vec<ConvexPiece>>,
        base_point: Vector,
    ) -> Result<Self> {
        let level_set = match level_set {
            Some(p) => p,
            None => derive_level_set(&phi)?,
        };
        let s = Scenario {
            kind: ScenarioKind::MaxFunction { phi, level_set },
            base_point,
            name: None,
        };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    pub fn linear_system(sys: LinearSystem, base_point: Vector) -> Result<Self> {
        let s = Scenario {
            kind: ScenarioKind::LinearSystem {
                sys,
                exact_distance: None,
            },
            base_point,
            name: None,
        };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    pub fn builtin(b: Builtin) -> Result<Self> {
        let base = Vector::new(b.base_point())?;
        let kind = match b {
            Builtin::StuWar => ScenarioKind::StuWar,
            Builtin::MaxQuadAffine => ScenarioKind::MaxFunction {
                phi: builtins::max_quad_affine(),
                level_set: builtins::max_quad_affine_level_set(),
            },
            Builtin::CircleWeighted => ScenarioKind::LinearSystem {
                sys: builtins::circle_weighted(),
                exact_distance: Some(builtins::circle_distance),
            },
            Builtin::CircleUnit => ScenarioKind::LinearSystem {
                sys: builtins::circle_unit(),
                exact_distance: Some(builtins::circle_distance),
            },
            Builtin::DiskSlab => {
                return Err(Error::input(
                    "disk-slab is a body, not a function; use it with the end-set tools",
                ))
            }
        };
        let s = Scenario {
            kind,
            base_point: base,
            name: Some(b.name().to_string()),
        };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// Same scenario at a different base point.
    pub fn at(mut self, base_point: Vector, tol: &Tolerances) -> Result<Self> {
        self.base_point = base_point;
        self.validate(tol)?;
        Ok(self)
    }

    pub fn kind(&self) -> &ScenarioKind {
        &self.kind
    }

    pub fn base_point(&self) -> &Vector {
        &self.base_point
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ScenarioKind::MaxFunction { phi, .. } => phi.dim(),
            ScenarioKind::LinearSystem { sys, .. } => sys.dim(),
            ScenarioKind::StuWar => 1,
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ScenarioKind::MaxFunction { phi, .. } => phi.value(x),
            ScenarioKind::LinearSystem { sys, .. } => sys.residual_unchecked(x),
            ScenarioKind::StuWar => builtins::stu_war_phi(x[0]),
        }
    }

    /// Base point on the level-set boundary, and level-set pieces consistent
    /// with the function on random points around it.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.base_point.dim() != self.dim() {
            return Err(Error::input(format!(
                "base point has dimension {}, scenario has {}",
                self.base_point.dim(),
                self.dim()
            )));
        }
        let v = self.phi(&self.base_point);
        if v.abs() > tol.active_tol {
            return Err(Error::input(format!("phi(base point) = {v:e}, expected 0")));
        }
        if let ScenarioKind::MaxFunction { phi, level_set } = &self.kind {
            for p in level_set {
                let fits = match p {
                    ConvexPiece::Interval { coord, .. } => *coord < phi.dim(),
                    other => other.dim() == Some(phi.dim()),
                };
                if !fits {
                    return Err(Error::input(format!(
                        "level-set piece {p:?} has the wrong dimension"
                    )));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x1e5e7);
            for _ in 0..LEVEL_SET_CHECKS {
                let x: Vec<f64> = self
                    .base_point
                    .iter()
                    .map(|c| c + rng.random_range(-1.0..1.0))
                    .collect();
                let v = phi.value(&x);
                if v.abs() <= 1e-6 {
                    continue;
                }
                let inside = level_set.iter().all(|p| p.contains(&x, 0.0));
                if inside != (v <= tol.active_tol) {
                    return Err(Error::input(format!(
                        "level-set pieces disagree with the function at {x:?} (phi = {v:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Deterministic radii added to the shells: dyadic radii for the dyadic builtin.
    pub fn extra_radii(&self, cfg: &SamplingConfig) -> Vec<f64> {
        match self.kind {
            ScenarioKind::StuWar => {
                let floor = cfg.r0 * cfg.beta.powi(cfg.shells as i32);
                (0..1100)
                    .map(|n| 2f64.powi(-n))
                    .skip_while(|&r| r > cfg.r0)
                    .take_while(|&r| r > floor)
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Zero sublevel sets of the pieces when each is a halfspace or a ball.
fn derive_level_set(phi: &MaxFunction) -> Result<Vec<ConvexPiece>> {
    let mut out = Vec::new();
    for (i, piece) in phi.pieces().iter().enumerate() {
        match piece {
            SmoothPiece::Affine { a, b } => affine_level_set(a, *b, i, &mut out)?,
            SmoothPiece::Quadratic { q, b, c } => {
                let n = b.dim();
                let diag = q[0][0];
                let scalar =
                    (0..n).all(|r| (0..n).all(|s| q[r][s] == if r == s { diag } else { 0.0 }));
                if !scalar || diag < 0.0 {
                    return Err(Error::input(format!(
                        "cannot derive the level set of piece {i}; pass explicit level-set pieces"
                    )));
                }
                if diag == 0.0 {
                    affine_level_set(b, -c, i, &mut out)?;
                    continue;
                }
                // q |x + b/(2q)|^2 <= |b|^2 / (4q) - c
                let center = b.scaled(-0.5 / diag);
                let r2 = center.dot(&center) - c / diag;
                if r2 <= 0.0 {
                    return Err(Error::input(format!(
                        "piece {i} has a level set with empty interior"
                    )));
                }
                out.push(ConvexPiece::ball(center, r2.sqrt())?);
            }
        }
    }
    Ok(out)
}

fn affine_level_set(a: &Vector, b: f64, i: usize, out: &mut Vec<ConvexPiece>) -> Result<()> {
    if a.is_zero() {
        if b < 0.0 {
            return Err(Error::input(format!("piece {i} is positive everywhere")));
        }
        return Ok(());
    }
    out.push(ConvexPiece::halfspace(a.clone(), b)?);
    Ok(())
}

/// `d(x, [phi <= 0])`: closed form for builtins, Dykstra otherwise.
pub fn level_set_distance(s: &Scenario, x: &[f64], tol: &Tolerances) -> Result<f64> {
    if x.len() != s.dim() {
        return Err(Error::input(format!(
            "point has dimension {}, scenario has {}",
            x.len(),
            s.dim()
        )));
    }
    if s.phi(x) <= 0.0 {
        return Ok(0.0);
    }
    match &s.kind {
        ScenarioKind::StuWar => Ok(builtins::stu_war_distance(x[0])),
        ScenarioKind::LinearSystem {
            exact_distance: Some(d),
            ..
        } => Ok(d(x)),
        ScenarioKind::LinearSystem { sys, .. } => {
            Ok(sys.feasible_distance(x, &s.base_point)?.distance)
        }
        ScenarioKind::MaxFunction { level_set, .. } => {
            if level_set.is_empty() {
                return Err(Error::input("scenario has no level-set description"));
            }
            let scale = distance(x, &s.base_point).min(1.0);
            let proj = project_intersection_with(
                level_set,
                x,
                DykstraConfig {
                    tol: tol.dist_tol * scale,
                    max_cycles: 20_000,
                },
            )?;
            Ok(proj.distance)
        }
    }
}

/// Per-shell minima of `phi(x) / d(x, [phi <= 0])` around the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellProfile {
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    /// `+inf` for shells without a positive sample.
    pub minima: Vec<f64>,
    /// Ratios recorded per shell.
    pub counts: Vec<usize>,
    /// Minimum over the innermost `ceil(m/3)` shells.
    pub liminf: f64,
    pub positive_samples: usize,
    /// Samples with `phi > 0` whose computed distance was zero (rounding at the boundary).
    pub skipped: usize,
    pub extra_radii: usize,
    pub diagnostic: Option<String>,
}

impl ShellProfile {
    pub fn tail(&self) -> &[f64] {
        &self.minima[self.minima.len() - crate::sampling::tail_len(self.minima.len())..]
    }
}

pub fn empirical_ebm(s: &Scenario, cfg: &SamplingConfig, tol: &Tolerances) -> Result<ShellProfile> {
    cfg.validate()?;
    let radii = cfg.radii();
    let extras = s.extra_radii(cfg);
    // extra radius r joins the shell j with r0 beta^(j+1) < r <= r0 beta^j
    let mut jobs: Vec<(usize, f64)> = radii.iter().copied().enumerate().collect();
    for &r in &extras {
        if let Some(j) = radii.iter().position(|&rj| r <= rj && r > rj * cfg.beta) {
            jobs.push((j, r));
        }
    }
    let dirs = cfg.unit_directions(s.dim());
    let xbar = &s.base_point;
    let tasks: Vec<(usize, f64, &Vector)> = jobs
        .iter()
        .flat_map(|&(j, r)| dirs.iter().map(move |u| (j, r, u)))
        .collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(j, r, u)| -> Result<(usize, Option<Option<f64>>)> {
            let x = u.scaled(r).add(xbar);
            let v = s.phi(&x);
            if v.is_nan() || v <= 0.0 {
                return Ok((j, None));
            }
            let d = level_set_distance(s, &x, tol)?;
            Ok((j, Some((d > 0.0).then(|| v / d))))
        })
        .collect::<Result<Vec<_>>>()?;

    let m = radii.len();
    let mut minima = vec![f64::INFINITY; m];
    let mut counts = vec![0; m];
    let mut positive = 0;
    let mut skipped = 0;
    for (j, o) in outcomes {
        match o {
            None => {}
            Some(None) => {
                positive += 1;
                skipped += 1;
            }
            Some(Some(ratio)) => {
                positive += 1;
                debug_assert!(ratio > 0.0 && ratio.is_finite());
                counts[j] += 1;
                minima[j] = minima[j].min(ratio);
            }
        }
    }
    let tail = &minima[m - cfg.tail_len()..];
    let liminf = tail.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(tail.iter().all(|&v| liminf <= v));
    let diagnostic = (positive == 0).then(|| {
        "no sample with phi > 0: the base point may not be on the active boundary, or sampling is too coarse".to_string()
    });
    Ok(ShellProfile {
        radii,
        minima,
        counts,
        liminf,
        positive_samples: positive,
        skipped,
        extra_radii: extras.len(),
        diagnostic,
    })
}

/// Where a reported number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Exact combinatorics and convex solvers on data at the base point.
    Computed,
    /// Depends on shell/direction sampling; not exhaustive.
    Sampled,
    /// Transcribed reference value outside the computable scope.
    Fixture,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Computed => "computed",
            Provenance::Sampled => "sampled",
            Provenance::Fixture => "fixture",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub provenance: Provenance,
    pub label: &'static str,
}

/// Outcome of checking `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Equal within tolerance.
    Tight,
    /// `a < b` beyond tolerance.
    Strict,
    Violated,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Tight => "tight",
            Side::Strict => "strict",
            Side::Violated => "violated",
        }
    }

    pub fn holds(self) -> bool {
        self != Side::Violated
    }
}

/// Tolerance used to compare two estimates.
pub fn comparison_tolerance(a: f64, b: f64) -> f64 {
    let big = a.abs().max(b.abs());
    if big.is_finite() {
        (0.02 * big).max(1e-6)
    } else {
        1e-6
    }
}

/// Classifies `a <= b`.
pub fn compare(a: f64, b: f64) -> Side {
    if a == b {
        return Side::Tight;
    }
    if a.is_infinite() || b.is_infinite() {
        return if a < b { Side::Strict } else { Side::Violated };
    }
    let tol = comparison_tolerance(a, b);
    if (a - b).abs() <= tol {
        Side::Tight
    } else if a < b {
        Side::Strict
    } else {
        Side::Violated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Details {
    MaxFunction {
        lower: LowerEstimate,
        upper: UpperEstimate,
        /// Whether each exposed face lies in the sampled outer limiting set.
        exposed_covered: Vec<bool>,
    },
    LinearSystem {
        lower: LinsysLower,
        formula: ModulusFormula,
    },
    StuWar {
        end_set: EndSetDistance,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub lower: Estimate,
    pub empirical: ShellProfile,
    pub upper: Estimate,
    /// `lower <= empirical`
    pub lower_side: Side,
    /// `empirical <= upper`
    pub upper_side: Side,
    pub details: Details,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_side.holds() && self.upper_side.holds()
    }
}

pub fn sandwich_report(
    s: &Scenario,
    cfg: &SamplingConfig,
    tol: &Tolerances,
) -> Result<SandwichReport> {
    let empirical = empirical_ebm(s, cfg, tol)?;
    let xbar = s.base_point.as_slice();
    let (lower, upper, details) = match &s.kind {
        ScenarioKind::MaxFunction { phi, .. } => {
            let lo = maxfunc::lower_estimate(phi, xbar, cfg, tol)?;
            let up = maxfunc::upper_estimate(phi, xbar, tol)?;
            let covered = exposed_faces_covered(&up.exposed, &lo.collection);
            (
                Estimate {
                    value: lo.distance,
                    provenance: Provenance::Sampled,
                    label: "distance to the outer limiting subdifferential",
                },
                Estimate {
                    value: up.distance,
                    provenance: Provenance::Computed,
                    label: "distance to the end set of the subdifferential",
                },
                Details::MaxFunction {
                    lower: lo,
                    upper: up,
                    exposed_covered: covered,
                },
            )
        }
        ScenarioKind::LinearSystem { sys, .. } => {
            let lo = linsys::lower_estimate(sys, xbar, cfg, tol)?;
            let formula = linsys::modulus_formula(sys, xbar, tol)?;
            (
                Estimate {
                    value: lo.distance,
                    provenance: Provenance::Sampled,
                    label: "distance to the outer limiting subdifferential",
                },
                Estimate {
                    value: formula.value,
                    provenance: Provenance::Computed,
                    label: "modulus formula (exact under regularity, upper estimate otherwise)",
                },
                Details::LinearSystem { lower: lo, formula },
            )
        }
        ScenarioKind::StuWar => {
            // subdifferential at 0 is [0, 1]
            let sub = PointSet::from_rows(&[[0.0], [1.0]])?;
            let end_set = end_set_distance(&sub, FaceMode::Enumerate, tol)?;
            (
                Estimate {
                    value: 0.0,
                    provenance: Provenance::Fixture,
                    label: "distance to the outer limiting subdifferential (reference value)",
                },
                Estimate {
                    value: end_set.distance,
                    provenance: Provenance::Computed,
                    label: "distance to the end set of the subdifferential",
                },
                Details::StuWar { end_set },
            )
        }
    };
    Ok(SandwichReport {
        lower_side: compare(lower.value, empirical.liminf),
        upper_side: compare(empirical.liminf, upper.value),
        lower,
        empirical,
        upper,
        details,
    })
}
