//! Dense two-phase primal simplex with post-optimal directional re-pivoting.
//!
//! The programs built by this crate have tens of variables and at most a few
//! hundred rows, so a full tableau is the simplest thing that is fast enough.
//! Every row carries its own artificial column; those columns hold `B⁻¹` for
//! the whole run, which is where the duals and the ray directions come from.

use super::{ConstraintRef, LinearProgram, LpError, LpSolution, LpStatus, RhsDirection, Sense};
use crate::tolerance::Tolerances;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 64;

#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = lower + x'
    Shift { col: usize, lower: f64 },
    /// x = upper - x'
    Mirror { col: usize, upper: f64 },
    /// x = x⁺ - x⁻
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Structural plus slack columns; artificials follow, then the rhs.
    ncol: usize,
    rhs: usize,
    cost: Vec<f64>,
    row_sign: Vec<f64>,
    eq_rows: Vec<usize>,
    ineq_rows: Vec<usize>,
    var_map: Vec<VarMap>,
    pivot_tol: f64,
    cost_eps: f64,
    zero_tol: f64,
    bland: bool,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(lp: &LinearProgram, tol: &Tolerances) -> Tableau {
        let flip = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut var_map = Vec::with_capacity(lp.num_vars());
        let mut ncols_struct = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for v in lp.variables() {
            if v.lower.is_finite() {
                let col = ncols_struct;
                ncols_struct += 1;
                if v.upper.is_finite() {
                    bound_rows.push((col, v.upper - v.lower));
                }
                var_map.push(VarMap::Shift { col, lower: v.lower });
            } else if v.upper.is_finite() {
                var_map.push(VarMap::Mirror { col: ncols_struct, upper: v.upper });
                ncols_struct += 1;
            } else {
                var_map.push(VarMap::Split { pos: ncols_struct, neg: ncols_struct + 1 });
                ncols_struct += 2;
            }
        }
        let n_eq = lp.equalities().len();
        let n_ineq = lp.inequalities().len();
        let m = n_eq + n_ineq + bound_rows.len();
        let n_slack = n_ineq + bound_rows.len();
        let ncol = ncols_struct + n_slack;
        let rhs = ncol + m;

        let mut cost = vec![0.0; ncol + m];
        for (v, map) in lp.variables().iter().zip(&var_map) {
            match *map {
                VarMap::Shift { col, .. } => cost[col] = flip * v.cost,
                VarMap::Mirror { col, .. } => cost[col] = -flip * v.cost,
                VarMap::Split { pos, neg } => {
                    cost[pos] = flip * v.cost;
                    cost[neg] = -flip * v.cost;
                }
            }
        }

        let mut rows = Vec::with_capacity(m);
        let fill = |coeffs: &[f64], b: f64| {
            let mut row = vec![0.0; rhs + 1];
            let mut b = b;
            for (j, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match var_map[j] {
                    VarMap::Shift { col, lower } => {
                        row[col] += a;
                        b -= a * lower;
                    }
                    VarMap::Mirror { col, upper } => {
                        row[col] -= a;
                        b -= a * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            row[rhs] = b;
            row
        };
        let mut eq_rows = Vec::with_capacity(n_eq);
        for c in lp.equalities() {
            eq_rows.push(rows.len());
            rows.push(fill(&c.coeffs, c.rhs));
        }
        let mut ineq_rows = Vec::with_capacity(n_ineq);
        let mut slack = ncols_struct;
        for c in lp.inequalities() {
            ineq_rows.push(rows.len());
            let mut row = fill(&c.coeffs, c.rhs);
            row[slack] = 1.0;
            slack += 1;
            rows.push(row);
        }
        for &(col, width) in &bound_rows {
            let mut row = vec![0.0; rhs + 1];
            row[col] = 1.0;
            row[slack] = 1.0;
            slack += 1;
            row[rhs] = width;
            rows.push(row);
        }

        let mut row_sign = vec![1.0; m];
        for (i, row) in rows.iter_mut().enumerate() {
            if row[rhs] < 0.0 {
                row_sign[i] = -1.0;
                for a in row.iter_mut() {
                    *a = -*a;
                }
            }
            row[ncol + i] = 1.0;
        }

        let b_scale = rows.iter().map(|r| r[rhs].abs()).fold(1.0_f64, f64::max);
        let c_scale = cost.iter().map(|c| c.abs()).fold(1.0_f64, f64::max);
        Tableau {
            rows,
            obj: vec![0.0; rhs + 1],
            basis: (ncol..ncol + m).collect(),
            ncol,
            rhs,
            cost,
            row_sign,
            eq_rows,
            ineq_rows,
            var_map,
            pivot_tol: tol.pivot,
            cost_eps: 1e-9 * c_scale,
            zero_tol: 1e-10 * b_scale,
            bland: false,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let piv = self.rows[p][q];
        for a in self.rows[p].iter_mut() {
            *a /= piv;
        }
        self.rows[p][q] = 1.0;
        let prow = self.rows[p].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (a, &pa) in row.iter_mut().zip(&prow) {
                    *a -= f * pa;
                }
                row[q] = 0.0;
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for (a, &pa) in self.obj.iter_mut().zip(&prow) {
                *a -= f * pa;
            }
            self.obj[q] = 0.0;
        }
        self.basis[p] = q;
    }

    fn iterate(&mut self, allowed: usize, max_iter: usize) -> Result<Outcome, LpError> {
        let mut degenerate_run = 0;
        for _ in 0..max_iter {
            let entering = if self.bland {
                (0..allowed).find(|&j| self.obj[j] < -self.cost_eps)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..allowed {
                    let d = self.obj[j];
                    if d < -self.cost_eps && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m() {
                let a = self.rows[i][q];
                if a > self.pivot_tol {
                    let ratio = self.rows[i][self.rhs].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12 * (1.0 + lr.abs())
                                || (ratio <= lr + 1e-12 * (1.0 + lr.abs()) && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((p, ratio)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if ratio <= self.zero_tol {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_SWITCH {
                    self.bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(p, q);
        }
        Err(LpError::Numerical(format!("simplex did not converge within {max_iter} pivots")))
    }

    fn max_iter(&self) -> usize {
        200 * (self.m() + self.ncol + 10)
    }

    /// Phase one; returns false when the program is infeasible.
    fn phase_one(&mut self, feas_tol: f64) -> Result<bool, LpError> {
        for j in 0..=self.rhs {
            if j >= self.ncol && j < self.rhs {
                self.obj[j] = 0.0;
            } else {
                self.obj[j] = -self.rows.iter().map(|r| r[j]).sum::<f64>();
            }
        }
        let max_iter = self.max_iter();
        self.iterate(self.ncol, max_iter)?;
        let infeasibility = -self.obj[self.rhs];
        if infeasibility > feas_tol {
            return Ok(false);
        }
        // Drive zero-level artificials out of the basis where possible; rows
        // where that fails are redundant and keep their artificial at zero.
        for i in 0..self.m() {
            if self.basis[i] >= self.ncol {
                let q = (0..self.ncol)
                    .filter(|j| !self.basis.contains(j))
                    .max_by(|&a, &b| self.rows[i][a].abs().total_cmp(&self.rows[i][b].abs()));
                if let Some(q) = q {
                    if self.rows[i][q].abs() > self.pivot_tol {
                        self.pivot(i, q);
                    }
                }
            }
        }
        Ok(true)
    }

    fn price(&mut self) {
        for j in 0..=self.rhs {
            let cj = if j < self.rhs { self.cost[j] } else { 0.0 };
            let z: f64 = self.rows.iter().zip(&self.basis).map(|(r, &b)| self.cost[b] * r[j]).sum();
            self.obj[j] = cj - z;
        }
    }

    fn phase_two(&mut self) -> Result<Outcome, LpError> {
        self.bland = false;
        self.price();
        let max_iter = self.max_iter();
        self.iterate(self.ncol, max_iter)
    }

    /// Row-space image of an rhs direction (after sign normalisation).
    fn row_direction(&self, d: &RhsDirection) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for &(c, w) in &d.0 {
            let row = match c {
                ConstraintRef::Eq(i) => self.eq_rows[i],
                ConstraintRef::Ineq(i) => self.ineq_rows[i],
            };
            out[row] += w * self.row_sign[row];
        }
        out
    }

    /// Dual-simplex pivots on degenerate rows until the basis stays primal
    /// feasible along the lexicographic ray. False if no such basis exists.
    fn align_with(&mut self, dirs: &[Vec<f64>]) -> Result<bool, LpError> {
        let dir_tol = 1e-9;
        let max_iter = self.max_iter();
        for _ in 0..max_iter {
            let mut pick: Option<usize> = None;
            for i in 0..self.m() {
                if self.rows[i][self.rhs] > self.zero_tol {
                    continue;
                }
                let negative = dirs
                    .iter()
                    .map(|d| (0..self.m()).map(|r| self.rows[i][self.ncol + r] * d[r]).sum::<f64>())
                    .find(|v| v.abs() > dir_tol)
                    .is_some_and(|v| v < 0.0);
                if negative && pick.is_none_or(|p| self.basis[i] < self.basis[p]) {
                    pick = Some(i);
                }
            }
            let Some(p) = pick else {
                return Ok(true);
            };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncol {
                let a = self.rows[p][j];
                if a < -self.pivot_tol && !self.basis.contains(&j) {
                    let ratio = self.obj[j].max(0.0) / -a;
                    if enter.is_none_or(|(_, r)| ratio < r - 1e-12 * (1.0 + r.abs())) {
                        enter = Some((j, ratio));
                    }
                }
            }
            let Some((q, _)) = enter else {
                return Ok(false);
            };
            self.pivot(p, q);
        }
        Err(LpError::Numerical("directional re-pivoting did not settle".into()))
    }

    fn extract(&self, lp: &LinearProgram) -> LpSolution {
        let mut xs = vec![0.0; self.ncol];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.ncol {
                xs[b] = self.rows[i][self.rhs];
            }
        }
        let primal: Vec<f64> = self
            .var_map
            .iter()
            .map(|map| match *map {
                VarMap::Shift { col, lower } => lower + xs[col],
                VarMap::Mirror { col, upper } => upper - xs[col],
                VarMap::Split { pos, neg } => xs[pos] - xs[neg],
            })
            .collect();
        let flip = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let dual = |row: usize| -> f64 {
            let y = -self.obj[self.ncol + row];
            // Keep -0.0 out of reports.
            let d = flip * self.row_sign[row] * y;
            if d == 0.0 {
                0.0
            } else {
                d
            }
        };
        LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective_value(&primal),
            primal,
            eq_duals: self.eq_rows.iter().map(|&r| dual(r)).collect(),
            ineq_duals: self.ineq_rows.iter().map(|&r| dual(r)).collect(),
        }
    }
}

fn run(lp: &LinearProgram, tol: &Tolerances) -> Result<(Tableau, Option<LpStatus>), LpError> {
    let mut t = Tableau::new(lp, tol);
    if !t.phase_one(tol.feas)? {
        return Ok((t, Some(LpStatus::Infeasible)));
    }
    match t.phase_two()? {
        Outcome::Optimal => Ok((t, None)),
        Outcome::Unbounded => Ok((t, Some(LpStatus::Unbounded))),
    }
}

pub(super) fn solve(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError> {
    let (t, status) = run(lp, tol)?;
    match status {
        Some(s) => Ok(LpSolution::non_optimal(s)),
        None => Ok(t.extract(lp)),
    }
}

pub(super) fn solve_directional(
    lp: &LinearProgram,
    tol: &Tolerances,
    dirs: &[RhsDirection],
) -> Result<Option<LpSolution>, LpError> {
    let (mut t, status) = run(lp, tol)?;
    if let Some(s) = status {
        return Ok(Some(LpSolution::non_optimal(s)));
    }
    let rows: Vec<Vec<f64>> = dirs.iter().map(|d| t.row_direction(d)).collect();
    if !t.align_with(&rows)? {
        return Ok(None);
    }
    Ok(Some(t.extract(lp)))
}
