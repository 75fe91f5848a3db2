//! Dykstra's alternating projection onto an intersection of simple convex pieces.

use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, Vector};

/// A simple closed convex set with a closed-form projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexPiece {
    /// `<normal, x> <= offset`
    Halfspace { normal: Vector, offset: f64 },
    /// Closed ball.
    Ball { center: Vector, radius: f64 },
    /// `lo <= x[coord] <= hi`; either end may be infinite.
    Interval { coord: usize, lo: f64, hi: f64 },
}

impl ConvexPiece {
    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 || !offset.is_finite() {
            return Err(Error::input(
                "halfspace needs a nonzero normal and finite offset",
            ));
        }
        Ok(ConvexPiece::Halfspace { normal, offset })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input("ball radius must be positive"));
        }
        Ok(ConvexPiece::Ball { center, radius })
    }

    pub fn interval(coord: usize, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::input(format!("interval [{lo}, {hi}] is empty")));
        }
        Ok(ConvexPiece::Interval { coord, lo, hi })
    }

    /// Dimension the piece constrains, where it is determined by the piece.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexPiece::Halfspace { normal, .. } => Some(normal.dim()),
            ConvexPiece::Ball { center, .. } => Some(center.dim()),
            ConvexPiece::Interval { .. } => None,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let ok = match self {
            ConvexPiece::Interval { coord, .. } => *coord < n,
            other => other.dim() == Some(n),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "piece {self:?} does not fit dimension {n}"
            )))
        }
    }

    /// Distance-like violation: 0 inside, Euclidean distance to the piece outside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            ConvexPiece::Halfspace { normal, offset } => {
                ((normal.dot(x) - offset) / normal.norm()).max(0.0)
            }
            ConvexPiece::Ball { center, radius } => (distance(x, center) - radius).max(0.0),
            ConvexPiece::Interval { coord, lo, hi } => {
                let v = x[*coord];
                (lo - v).max(v - hi).max(0.0)
            }
        }
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        self.violation(x) <= slack
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexPiece::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    return x.to_vec();
                }
                let scale = excess / dot(normal, normal);
                x.iter()
                    .zip(normal.iter())
                    .map(|(xi, ai)| xi - scale * ai)
                    .collect()
            }
            ConvexPiece::Ball { center, radius } => {
                let d = distance(x, center);
                if d <= *radius {
                    return x.to_vec();
                }
                let s = radius / d;
                x.iter()
                    .zip(center.iter())
                    .map(|(xi, ci)| ci + s * (xi - ci))
                    .collect()
            }
            ConvexPiece::Interval { coord, lo, hi } => {
                let mut p = x.to_vec();
                p[*coord] = p[*coord].clamp(*lo, *hi);
                p
            }
        }
    }
}

/// Iteration controls for [`project_intersection_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraConfig {
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        DykstraConfig {
            tol: 1e-6,
            max_cycles: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vector,
    pub distance: f64,
    pub cycles: usize,
}

/// Euclidean projection of `x` onto the intersection of `pieces` with the
/// default stopping rule at `dist_tol`.
pub fn project_intersection(
    pieces: &[ConvexPiece],
    x: &[f64],
    dist_tol: f64,
) -> Result<Projection> {
    project_intersection_with(
        pieces,
        x,
        DykstraConfig {
            tol: dist_tol,
            ..DykstraConfig::default()
        },
    )
}

pub fn project_intersection_with(
    pieces: &[ConvexPiece],
    x: &[f64],
    cfg: DykstraConfig,
) -> Result<Projection> {
    if pieces.is_empty() {
        return Err(Error::input("need at least one convex piece"));
    }
    let n = x.len();
    if n == 0 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("projection point must be finite and nonempty"));
    }
    for p in pieces {
        p.check_dim(n)?;
    }
    let start_norm = norm(x);

    if pieces.len() == 1 {
        let p = pieces[0].project(x);
        return Ok(finish(x, p, 0));
    }
    if pieces.iter().all(|p| p.contains(x, 0.0)) {
        return Ok(finish(x, x.to_vec(), 0));
    }

    let mut y = x.to_vec();
    let mut increments = vec![vec![0.0; n]; pieces.len()];
    let mut shift = vec![0.0; n];
    for cycle in 1..=cfg.max_cycles {
        let before = y.clone();
        for (piece, inc) in pieces.iter().zip(increments.iter_mut()) {
            for ((s, yi), ii) in shift.iter_mut().zip(&y).zip(inc.iter()) {
                *s = yi + ii;
            }
            let p = piece.project(&shift);
            for ((ii, s), pi) in inc.iter_mut().zip(&shift).zip(&p) {
                *ii = s - pi;
            }
            y = p;
        }
        let moved = distance(&before, &y);
        let scale = 1.0 + norm(&y);
        if !scale.is_finite() || norm(&y) > 1e12 * (1.0 + start_norm) {
            return Err(Error::LikelyInfeasible);
        }
        let feasible = pieces.iter().all(|p| p.contains(&y, cfg.tol * scale));
        if moved <= 1e-3 * cfg.tol * scale && feasible {
            return Ok(finish(x, y, cycle));
        }
    }
    Err(Error::Numerical {
        solver: "project_intersection",
        reason: format!("no convergence within {} cycles", cfg.max_cycles),
        best: Some(y),
    })
}

fn finish(x: &[f64], p: Vec<f64>, cycles: usize) -> Projection {
    let dist = distance(x, &p);
    Projection {
        point: Vector::from_vec_unchecked(p),
        distance: dist,
        cycles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn disk_and_halfplane() -> Vec<ConvexPiece> {
        vec![
            ConvexPiece::ball(v(&[-0.25, -0.25]), 2f64.sqrt() / 4.0).unwrap(),
            ConvexPiece::halfspace(v(&[1.0, 1.0]), 0.0).unwrap(),
        ]
    }

    #[test]
    fn halfspace_closed_form() {
        let pieces = [ConvexPiece::halfspace(v(&[1.0, 0.0]), 0.0).unwrap()];
        let p = project_intersection(&pieces, &[2.0, 3.0], 1e-6).unwrap();
        assert_eq!(p.point.as_slice(), &[0.0, 3.0]);
        assert_eq!(p.distance, 2.0);
    }

    #[test]
    fn half_line_in_one_dimension() {
        let pieces = [ConvexPiece::interval(0, f64::NEG_INFINITY, 0.0).unwrap()];
        let p = project_intersection(&pieces, &[0.75], 1e-6).unwrap();
        assert_eq!(p.point.as_slice(), &[0.0]);
        assert_eq!(p.distance, 0.75);
    }

    #[test]
    fn diagonal_points_project_to_origin() {
        // dense sampling of the boundary of disk ∩ halfplane as an oracle
        let pieces = disk_and_halfplane();
        for &t in &[1e-3, 0.1, 0.5, 2.0] {
            let x = [t, t];
            let sampled = (0..200_000)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / 200_000.0;
                    let r = 2f64.sqrt() / 4.0;
                    [-0.25 + r * th.cos(), -0.25 + r * th.sin()]
                })
                .map(|b| distance(&x, &b))
                .fold(f64::INFINITY, f64::min);
            let p = project_intersection(&pieces, &x, 1e-9).unwrap();
            assert!((p.distance - 2f64.sqrt() * t).abs() < 1e-9 * (1.0 + t));
            assert!(p.distance <= sampled + 1e-12);
            assert!((p.distance - sampled).abs() < 1e-6);
        }
    }

    #[test]
    fn box_corner_needs_several_cycles() {
        let pieces = vec![
            ConvexPiece::halfspace(v(&[1.0, 2.0]), 1.0).unwrap(),
            ConvexPiece::halfspace(v(&[2.0, 1.0]), 1.0).unwrap(),
        ];
        let p = project_intersection(&pieces, &[3.0, 3.0], 1e-10).unwrap();
        assert!((p.point[0] - 1.0 / 3.0).abs() < 1e-8 && (p.point[1] - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_pieces() {
        assert!(ConvexPiece::ball(v(&[0.0]), 0.0).is_err());
        assert!(ConvexPiece::halfspace(v(&[0.0, 0.0]), 1.0).is_err());
        assert!(ConvexPiece::interval(0, 1.0, 0.0).is_err());
        let pieces = [ConvexPiece::interval(3, 0.0, 1.0).unwrap()];
        assert!(project_intersection(&pieces, &[0.0, 0.0], 1e-6).is_err());
    }

    fn pieces_strategy() -> impl Strategy<Value = (Vec<ConvexPiece>, Vec<f64>)> {
        // all pieces contain the origin, so the intersection is nonempty
        let halfspace = (0.0..std::f64::consts::TAU, 0.0..2.0f64)
            .prop_map(|(th, b)| ConvexPiece::halfspace(v(&[th.cos(), th.sin()]), b).unwrap());
        let ball = (-0.5..0.5f64, -0.5..0.5f64, 0.0..1.0f64).prop_map(|(cx, cy, extra)| {
            let r = (cx * cx + cy * cy).sqrt() + 0.1 + extra;
            ConvexPiece::ball(v(&[cx, cy]), r).unwrap()
        });
        let piece = prop_oneof![halfspace, ball];
        (
            prop::collection::vec(piece, 1..4),
            prop::collection::vec(-3.0..3.0f64, 2),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_is_idempotent_and_satisfies_variational_inequality((pieces, x) in pieces_strategy()) {
            let tol = 1e-6;
            let p = project_intersection(&pieces, &x, tol).unwrap();
            for piece in &pieces {
                prop_assert!(piece.contains(&p.point, tol * (1.0 + p.point.norm())));
            }
            let again = project_intersection(&pieces, &p.point, tol).unwrap();
            prop_assert!(distance(&again.point, &p.point) < tol);

            // sampled feasible points y: <x - p, y - p> <= tol (1 + |x - p|)
            let r: Vec<f64> = x.iter().zip(p.point.iter()).map(|(a, b)| a - b).collect();
            for k in 0..64 {
                let th = k as f64 * 0.37;
                for rad in [0.05, 0.5, 1.5] {
                    let y = [rad * th.cos(), rad * th.sin()];
                    if pieces.iter().all(|pc| pc.contains(&y, 0.0)) {
                        let d: Vec<f64> = y.iter().zip(p.point.iter()).map(|(a, b)| a - b).collect();
                        prop_assert!(dot(&r, &d) <= tol * (1.0 + norm(&r)));
                    }
                }
            }
        }
    }
}
