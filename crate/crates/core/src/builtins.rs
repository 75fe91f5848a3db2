//! Built-in fixtures: a planar body with a curved top, a one-dimensional
//! function with dyadic breakpoints, a max of a quadratic and an affine piece,
//! and two circle-indexed linear systems.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{norm, BodyOracle, Vector};
use crate::linsys::LinearSystem;
use crate::maxfunc::{MaxFunction, SmoothPiece};
use crate::solvers::ConvexPiece;

/// Default grid size of the circle systems.
pub const CIRCLE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    StuWar,
    MaxQuadAffine,
    CircleWeighted,
    CircleUnit,
    DiskSlab,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::StuWar,
        Builtin::MaxQuadAffine,
        Builtin::CircleWeighted,
        Builtin::CircleUnit,
        Builtin::DiskSlab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::StuWar => "stu-war",
            Builtin::MaxQuadAffine => "max-quad-affine",
            Builtin::CircleWeighted => "circle-weighted",
            Builtin::CircleUnit => "circle-unit",
            Builtin::DiskSlab => "disk-slab",
        }
    }

    /// Base point used when none is given.
    pub fn base_point(self) -> Vec<f64> {
        match self {
            Builtin::StuWar => vec![0.0],
            Builtin::MaxQuadAffine | Builtin::DiskSlab => vec![0.0, 0.0],
            Builtin::CircleWeighted | Builtin::CircleUnit => vec![1.0, 0.0],
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Builtin::ALL.iter().map(|b| b.name()).collect();
                Error::input(format!(
                    "unknown builtin '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// `{0 <= x1 <= 2, 0 <= x2 <= 1 + sqrt(1 - (x1 - 1)^2)}`
pub fn disk_slab_member(x: &[f64]) -> bool {
    let (x1, x2) = (x[0], x[1]);
    if !(0.0..=2.0).contains(&x1) || x2 < 0.0 {
        return false;
    }
    let s = 1.0 - (x1 - 1.0) * (x1 - 1.0);
    x2 <= 1.0 + s.max(0.0).sqrt()
}

pub fn disk_slab_body() -> BodyOracle {
    BodyOracle::new(2, 2.0 * 2f64.sqrt(), disk_slab_member).expect("disk-slab body is convex")
}

/// Piecewise-linear function with breakpoints at the dyadic points: zero on
/// `x <= 0`; on `[2^(-n-1), 2^(-n)]` it equals `2^(-n)` for odd `n` and
/// `3x - 2^(-n)` for even `n`. Continuous, with `1 <= phi(x)/x <= 2`.
pub fn stu_war_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut n = (-x.log2()).floor() as i32;
    while x > 2f64.powi(-n) {
        n -= 1;
    }
    while x < 2f64.powi(-n - 1) {
        n += 1;
    }
    let top = 2f64.powi(-n);
    if n.rem_euclid(2) == 1 {
        top
    } else {
        3.0 * x - top
    }
}

/// Distance to the level set `(-inf, 0]` of [`stu_war_phi`].
pub fn stu_war_distance(x: f64) -> f64 {
    x.max(0.0)
}

/// `max(|x|^2 + (x1 + x2)/2, x1 + x2)`
pub fn max_quad_affine() -> MaxFunction {
    let quad = SmoothPiece::quadratic(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        Vector::new(vec![0.5, 0.5]).expect("finite"),
        0.0,
    )
    .expect("valid quadratic");
    let lin = SmoothPiece::affine(Vector::new(vec![1.0, 1.0]).expect("finite"), 0.0)
        .expect("valid affine");
    MaxFunction::new(vec![quad, lin]).expect("two planar pieces")
}

/// Level set of [`max_quad_affine`]: the disk of radius `sqrt(2)/4` about
/// `(-1/4, -1/4)` intersected with `x1 + x2 <= 0`.
pub fn max_quad_affine_level_set() -> Vec<ConvexPiece> {
    vec![
        ConvexPiece::ball(
            Vector::new(vec![-0.25, -0.25]).expect("finite"),
            2f64.sqrt() / 4.0,
        )
        .expect("ball"),
        ConvexPiece::halfspace(Vector::new(vec![1.0, 1.0]).expect("finite"), 0.0)
            .expect("halfspace"),
    ]
}

/// `t (cos t, sin t) . x <= t` for `t in [0, 2 pi]`; solution set is the unit disk.
pub fn circle_weighted() -> LinearSystem {
    LinearSystem::curve("circle-weighted", 2, (0.0, TAU), CIRCLE_GRID, |t| {
        (vec![t * t.cos(), t * t.sin()], t)
    })
    .expect("valid curve")
    .with_active_solver(circle_weighted_active)
}

/// On the closed disk the maximum 0 is attained at `t = 0`, and on the unit
/// circle also at the polar angle. Outside the disk there is no closed form.
fn circle_weighted_active(x: &[f64], tol: f64) -> Option<Vec<f64>> {
    let rho = norm(x);
    if rho > 1.0 + tol {
        return None;
    }
    if rho < 1.0 - tol {
        return Some(vec![0.0]);
    }
    let theta = x[1].atan2(x[0]).rem_euclid(TAU);
    Some(if theta <= 1e-12 || TAU - theta <= 1e-12 {
        vec![0.0, TAU]
    } else {
        vec![0.0, theta]
    })
}

/// `(cos t, sin t) . x <= 1` for `t in [0, 2 pi]`; residual is `|x| - 1`.
pub fn circle_unit() -> LinearSystem {
    LinearSystem::curve("circle-unit", 2, (0.0, TAU), CIRCLE_GRID, |t| {
        (vec![t.cos(), t.sin()], 1.0)
    })
    .expect("valid curve")
    .with_active_solver(circle_unit_active)
}

/// The maximum is attained at the polar angle; the window of near-maximal
/// parameters wraps to the other end of `[0, 2 pi]` when it reaches it.
fn circle_unit_active(x: &[f64], tol: f64) -> Option<Vec<f64>> {
    let rho = norm(x);
    if rho == 0.0 {
        return None;
    }
    let phi = rho - 1.0;
    let window = (2.0 * tol * (1.0 + phi.abs()) / rho).sqrt();
    let theta = x[1].atan2(x[0]).rem_euclid(TAU);
    let mut ts = vec![theta];
    if theta <= window {
        ts.push(TAU);
    }
    if TAU - theta <= window {
        ts.push(0.0);
    }
    Some(ts)
}

/// `d(x, unit disk)` without cancellation near the circle.
pub fn circle_distance(x: &[f64]) -> f64 {
    let rho = norm(x);
    if rho <= 1.0 {
        return 0.0;
    }
    // |x|^2 - 1 = (x1 - 1)(x1 + 1) + x2^2
    let excess = (x[0] - 1.0) * (x[0] + 1.0) + x[1..].iter().map(|v| v * v).sum::<f64>();
    excess / (rho + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!("nope".parse::<Builtin>().is_err());
    }

    #[test]
    fn stu_war_values() {
        assert_eq!(stu_war_phi(-1.0), 0.0);
        assert_eq!(stu_war_phi(0.0), 0.0);
        // n = 0 is even: 3x - 1 on [1/2, 1]
        assert_eq!(stu_war_phi(1.0), 2.0);
        assert_eq!(stu_war_phi(0.75), 1.25);
        // n = 1 is odd: constant 1/2 on [1/4, 1/2]
        assert_eq!(stu_war_phi(0.5), 0.5);
        assert_eq!(stu_war_phi(0.3), 0.5);
        assert_eq!(stu_war_distance(0.75), 0.75);
        assert_eq!(stu_war_distance(-0.2), 0.0);
    }

    #[test]
    fn stu_war_is_continuous_with_bounded_ratio() {
        for n in 1..40 {
            let x = 2f64.powi(-n);
            let left = stu_war_phi(x * (1.0 - 1e-12));
            let right = stu_war_phi(x * (1.0 + 1e-12));
            assert!((left - right).abs() < 1e-9 * x, "n = {n}");
            let ratio = stu_war_phi(x) / x;
            assert!((ratio - if n % 2 == 1 { 1.0 } else { 2.0 }).abs() < 1e-15);
        }
        for k in 1..2000 {
            let x = 1e-6 + k as f64 * 5e-4;
            let r = stu_war_phi(x) / x;
            assert!((1.0..=2.0 + 1e-12).contains(&r), "x = {x}");
        }
    }

    #[test]
    fn disk_slab_membership() {
        assert!(disk_slab_member(&[0.0, 1.0]));
        assert!(disk_slab_member(&[1.0, 2.0]));
        assert!(disk_slab_member(&[2.0, 0.5]));
        assert!(!disk_slab_member(&[1.0, 2.0 + 1e-9]));
        assert!(!disk_slab_member(&[-1e-9, 0.5]));
        assert!(disk_slab_body().contains_origin());
    }

    #[test]
    fn quad_affine_level_set_matches_function() {
        let phi = max_quad_affine();
        let pieces = max_quad_affine_level_set();
        for i in -40..=40 {
            for j in -40..=40 {
                let x = [i as f64 / 40.0, j as f64 / 40.0];
                let v = phi.eval(&x).unwrap();
                if v.abs() > 1e-9 {
                    assert_eq!(
                        v <= 0.0,
                        pieces.iter().all(|p| p.contains(&x, 0.0)),
                        "{x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn circle_distance_is_stable() {
        assert_eq!(circle_distance(&[0.5, 0.0]), 0.0);
        assert!((circle_distance(&[3.0, 4.0]) - 4.0).abs() < 1e-15);
        let r = 1e-7;
        let d = circle_distance(&[1.0, r]);
        assert!((d - r * r / 2.0).abs() < 1e-6 * r * r);
    }
}
