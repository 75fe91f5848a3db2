//! Dense two-phase simplex method with Bland's anti-cycling rule.
//!
//! Problems here are tiny (tens of variables), so a full tableau is kept and
//! every pivot touches every entry.

use crate::error::{Error, Result};
use crate::geometry::{dot, Tolerances};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

/// Optional lower/upper bound on one variable. `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VarBound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl VarBound {
    pub const FREE: VarBound = VarBound {
        lower: None,
        upper: None,
    };
    pub const NONNEG: VarBound = VarBound {
        lower: Some(0.0),
        upper: None,
    };

    pub fn between(lower: f64, upper: f64) -> Self {
        VarBound {
            lower: Some(lower),
            upper: Some(upper),
        }
    }
}

/// `maximize <objective, z>` subject to equality rows, `<=` rows and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<(Vec<f64>, f64)>,
    pub ineq_rows: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<VarBound>,
}

impl LpProblem {
    /// A problem in `nvars` free variables with the given objective.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            bounds: vec![VarBound::FREE; n],
        }
    }

    pub fn nvars(&self) -> usize {
        self.objective.len()
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push((row, rhs));
        self
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq_rows.push((row, rhs));
        self
    }

    pub fn bound(mut self, var: usize, bound: VarBound) -> Self {
        self.bounds[var] = bound;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.nvars();
        if n == 0 {
            return Err(Error::input("LP needs at least one variable"));
        }
        if self.bounds.len() != n {
            return Err(Error::input("LP bounds length differs from variable count"));
        }
        let rows = self.eq_rows.iter().chain(&self.ineq_rows);
        for (row, rhs) in rows {
            if row.len() != n {
                return Err(Error::input(format!(
                    "LP row has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if !rhs.is_finite() || row.iter().any(|c| !c.is_finite()) {
                return Err(Error::input("LP coefficients must be finite"));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("LP objective must be finite"));
        }
        for b in &self.bounds {
            if let (Some(l), Some(u)) = (b.lower, b.upper) {
                if l > u {
                    return Err(Error::input(format!("variable bound [{l}, {u}] is empty")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, rhs) in &self.eq_rows {
            worst = worst.max((dot(row, z) - rhs).abs());
        }
        for (row, rhs) in &self.ineq_rows {
            worst = worst.max(dot(row, z) - rhs);
        }
        for (b, &v) in self.bounds.iter().zip(z) {
            if let Some(l) = b.lower {
                worst = worst.max(l - v);
            }
            if let Some(u) = b.upper {
                worst = worst.max(v - u);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { z: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { z, value } => Some((z, *value)),
            _ => None,
        }
    }
}

/// How an original variable is expressed through nonnegative columns.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for maximizing `cost`; the last entry holds `-value`.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = cost.to_vec();
        obj.push(0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (v, t) in obj.iter_mut().zip(row) {
                    *v -= cb * t;
                }
            }
        }
        obj
    }

    /// Primal simplex with Bland's rule over the columns flagged in `allowed`.
    /// Returns `false` if the objective is unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: &[bool], pivots: &mut usize) -> Result<bool> {
        loop {
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && obj[j] > COST_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-14 * (1.0 + best.abs())
                                || (ratio <= best + 1e-14 * (1.0 + best.abs())
                                    && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::numerical("lp_solve", "pivot limit exceeded"));
            }
            self.pivot(r, enter, obj);
        }
    }
}

/// Solves a small dense linear program.
pub fn lp_solve(p: &LpProblem, tol: &Tolerances) -> Result<LpOutcome> {
    p.validate()?;
    let n = p.nvars();

    // Substitute every variable by nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols_y = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for b in &p.bounds {
        let map = match (b.lower, b.upper) {
            (Some(l), u) => {
                let col = ncols_y;
                ncols_y += 1;
                if let Some(u) = u {
                    bound_rows.push((col, u - l));
                }
                VarMap {
                    offset: l,
                    cols: vec![(col, 1.0)],
                }
            }
            (None, Some(u)) => {
                let col = ncols_y;
                ncols_y += 1;
                VarMap {
                    offset: u,
                    cols: vec![(col, -1.0)],
                }
            }
            (None, None) => {
                let col = ncols_y;
                ncols_y += 2;
                VarMap {
                    offset: 0.0,
                    cols: vec![(col, 1.0), (col + 1, -1.0)],
                }
            }
        };
        maps.push(map);
    }

    let transform = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; ncols_y];
        let mut shift = 0.0;
        for (j, &r) in row.iter().enumerate() {
            shift += r * maps[j].offset;
            for &(c, s) in &maps[j].cols {
                out[c] += r * s;
            }
        }
        (out, rhs - shift)
    };

    // Rows: (coefficients over y, rhs, needs slack)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, rhs) in &p.eq_rows {
        let (r, b) = transform(row, *rhs);
        rows.push((r, b, false));
    }
    for (row, rhs) in &p.ineq_rows {
        let (r, b) = transform(row, *rhs);
        rows.push((r, b, true));
    }
    for &(col, width) in &bound_rows {
        let mut r = vec![0.0; ncols_y];
        r[col] = 1.0;
        rows.push((r, width, true));
    }

    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.2).count();
    let art0 = ncols_y + nslack;
    let ncols = art0 + m;

    if m == 0 {
        // Only sign constraints on the columns: optimum is 0 unless some cost is positive.
        let (cost, _) = transform(&p.objective, 0.0);
        if cost.iter().any(|&c| c > COST_TOL) {
            return Ok(LpOutcome::Unbounded);
        }
        let z: Vec<f64> = maps.iter().map(|m| m.offset).collect();
        let value = dot(&p.objective, &z);
        return Ok(LpOutcome::Optimal { z, value });
    }

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        ncols,
    };
    let mut slack = ncols_y;
    for (i, (r, b, has_slack)) in rows.into_iter().enumerate() {
        let mut full = vec![0.0; ncols + 1];
        full[..ncols_y].copy_from_slice(&r);
        if has_slack {
            full[slack] = 1.0;
            slack += 1;
        }
        full[ncols] = b;
        if b < 0.0 {
            for v in full.iter_mut() {
                *v = -*v;
            }
        }
        full[art0 + i] = 1.0;
        tab.rows.push(full);
        tab.basis.push(art0 + i);
    }

    let mut pivots = 0;

    // Phase 1: drive the artificial columns to zero.
    let mut cost1 = vec![0.0; ncols];
    for c in cost1.iter_mut().skip(art0) {
        *c = -1.0;
    }
    let mut obj = tab.reduced_costs(&cost1);
    let all = vec![true; ncols];
    tab.optimize(&mut obj, &all, &mut pivots)?;
    let infeasibility = obj[ncols];
    let scale = 1.0
        + tab
            .rows
            .iter()
            .map(|r| r[ncols].abs())
            .fold(0.0_f64, f64::max);
    if infeasibility > tol.eq_tol * scale {
        return Ok(LpOutcome::Infeasible);
    }

    // Pivot remaining (zero-level) artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= art0 {
            let candidate = (0..art0)
                .filter(|&j| tab.rows[i][j].abs() > 1e-9)
                .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()));
            match candidate {
                Some(j) => {
                    tab.pivot(i, j, &mut obj);
                    i += 1;
                }
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    // Phase 2 on the structural and slack columns.
    let (cost_y, _) = transform(&p.objective, 0.0);
    let mut cost2 = vec![0.0; ncols];
    cost2[..ncols_y].copy_from_slice(&cost_y);
    let mut obj = tab.reduced_costs(&cost2);
    let mut allowed = vec![true; ncols];
    for a in allowed.iter_mut().skip(art0) {
        *a = false;
    }
    if !tab.optimize(&mut obj, &allowed, &mut pivots)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i).max(0.0);
    }
    let z: Vec<f64> = maps
        .iter()
        .map(|m| m.offset + m.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>())
        .collect();
    let value = dot(&p.objective, &z);
    let violation = p.max_violation(&z);
    let zscale = 1.0 + z.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    if violation > 1e3 * tol.eq_tol * zscale * scale {
        return Err(Error::Numerical {
            solver: "lp_solve",
            reason: format!("optimal basis violates constraints by {violation:e}"),
            best: Some(z),
        });
    }
    Ok(LpOutcome::Optimal { z, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn simple_upper_bound() {
        let p = LpProblem::maximize(vec![1.0]).le(vec![1.0], 3.0);
        let out = lp_solve(&p, &tol()).unwrap();
        let (z, v) = out.optimal().unwrap();
        assert!((z[0] - 3.0).abs() < 1e-12);
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_equality() {
        let p = LpProblem::maximize(vec![1.0])
            .eq(vec![1.0], 1.0)
            .le(vec![1.0], 0.0);
        assert_eq!(lp_solve(&p, &tol()).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unconstrained_is_unbounded() {
        let p = LpProblem::maximize(vec![1.0]);
        assert_eq!(lp_solve(&p, &tol()).unwrap(), LpOutcome::Unbounded);
        let p = LpProblem::maximize(vec![1.0, 0.0]).le(vec![0.0, 1.0], 1.0);
        assert_eq!(lp_solve(&p, &tol()).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn bounded_variables_and_mixed_rows() {
        // max x + y, x in [-1, 2], y <= 5, x + 2y = 4
        let p = LpProblem::maximize(vec![1.0, 1.0])
            .eq(vec![1.0, 2.0], 4.0)
            .bound(0, VarBound::between(-1.0, 2.0))
            .bound(
                1,
                VarBound {
                    lower: None,
                    upper: Some(5.0),
                },
            );
        let (z, v) = lp_solve(&p, &tol())
            .unwrap()
            .optimal()
            .map(|(z, v)| (z.to_vec(), v))
            .unwrap();
        assert!(
            (z[0] - 2.0).abs() < 1e-10 && (z[1] - 1.0).abs() < 1e-10,
            "{z:?}"
        );
        assert!((v - 3.0).abs() < 1e-10);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let p = LpProblem::maximize(vec![1.0, 1.0])
            .eq(vec![1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0], 2.0)
            .bound(0, VarBound::NONNEG)
            .bound(1, VarBound::NONNEG);
        let (_, v) = lp_solve(&p, &tol())
            .unwrap()
            .optimal()
            .map(|(z, v)| (z.to_vec(), v))
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale cycling example (cycles under the largest-coefficient rule).
        let p = LpProblem::maximize(vec![0.75, -150.0, 0.02, -6.0])
            .le(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .le(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .le(vec![0.0, 0.0, 1.0, 0.0], 1.0)
            .bound(0, VarBound::NONNEG)
            .bound(1, VarBound::NONNEG)
            .bound(2, VarBound::NONNEG)
            .bound(3, VarBound::NONNEG);
        let (_, v) = lp_solve(&p, &tol())
            .unwrap()
            .optimal()
            .map(|(z, v)| (z.to_vec(), v))
            .unwrap();
        assert!((v - 0.05).abs() < 1e-10, "{v}");
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let p = LpProblem::maximize(vec![1.0, 2.0]).le(vec![1.0], 1.0);
        assert!(matches!(lp_solve(&p, &tol()), Err(Error::Input(_))));
    }

    proptest! {
        // A vertex of a random 2-D polygon made optimal by construction: the
        // objective is a strictly positive combination of the two tight rows.
        #[test]
        fn planted_vertex_is_recovered(
            vx in -5.0..5.0f64, vy in -5.0..5.0f64,
            t1 in 0.0..std::f64::consts::PI, dt in 0.3..2.5f64,
            mu1 in 0.1..2.0f64, mu2 in 0.1..2.0f64,
            extra in prop::collection::vec((0.0..std::f64::consts::TAU, 0.5..3.0f64), 0..4),
        ) {
            let t2 = t1 + dt;
            let n1 = [t1.cos(), t1.sin()];
            let n2 = [t2.cos(), t2.sin()];
            let v = [vx, vy];
            let mut p = LpProblem::maximize(vec![mu1 * n1[0] + mu2 * n2[0], mu1 * n1[1] + mu2 * n2[1]])
                .le(n1.to_vec(), dot(&n1, &v))
                .le(n2.to_vec(), dot(&n2, &v));
            for (theta, slack) in extra {
                let nrm = [theta.cos(), theta.sin()];
                p = p.le(nrm.to_vec(), dot(&nrm, &v) + slack);
            }
            let expected = dot(&p.objective, &v);
            match lp_solve(&p, &Tolerances::default()).unwrap() {
                LpOutcome::Optimal { value, .. } => {
                    prop_assert!((value - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
                }
                other => prop_assert!(false, "unexpected {other:?}"),
            }
        }
    }
}
