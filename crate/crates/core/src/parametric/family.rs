use std::cell::Cell;

use crate::grid::{build_maxdr_lp, build_maxur_lp, build_minc_lp, GridModel, Labels};
use crate::lp::{ConstraintRef, LinearProgram, LpSolution, LpStatus, RhsDirection};
use crate::tolerance::Tolerances;

use super::ParametricError;

/// A program whose listed rows have right-hand side `offset + weight·x`.
#[derive(Clone, Debug)]
pub struct ParametricLp {
    lp: LinearProgram,
    rows: Vec<(ConstraintRef, f64, f64)>,
    direction: RhsDirection,
    tol: Tolerances,
    solves: Cell<usize>,
}

impl ParametricLp {
    /// Rows in `direction` move with the parameter; the program's current
    /// right-hand sides are the values at `x = 0`.
    pub fn new(lp: LinearProgram, direction: RhsDirection, tol: Tolerances) -> Self {
        let rows = direction.0.iter().map(|&(c, w)| (c, lp.rhs(c), w)).collect();
        ParametricLp { lp, rows, direction, tol, solves: Cell::new(0) }
    }

    pub fn program(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// LP solves issued so far.
    pub fn solves(&self) -> usize {
        self.solves.get()
    }

    fn at(&self, x: f64) -> LinearProgram {
        let updates: Vec<_> = self.rows.iter().map(|&(c, off, w)| (c, off + w * x)).collect();
        self.lp.with_rhs(&updates)
    }

    fn check(sol: &LpSolution, x: f64) -> Result<(), ParametricError> {
        if sol.status == LpStatus::Unbounded {
            return Err(ParametricError::Unbounded(x));
        }
        Ok(())
    }

    pub fn solve(&self, x: f64) -> Result<LpSolution, ParametricError> {
        self.solves.set(self.solves.get() + 1);
        let sol = self.at(x).solve_with(&self.tol)?;
        Self::check(&sol, x)?;
        Ok(sol)
    }

    /// Optimal value, or `None` when infeasible.
    pub fn value(&self, x: f64) -> Result<Option<f64>, ParametricError> {
        let sol = self.solve(x)?;
        Ok(sol.is_optimal().then_some(sol.objective))
    }

    /// Value and one-sided slope at `x`: right slope when `forward`, left
    /// otherwise. `None` if infeasible at `x` or on that side of it.
    pub fn value_and_slope(&self, x: f64, forward: bool) -> Result<Option<(f64, f64)>, ParametricError> {
        self.solves.set(self.solves.get() + 1);
        let sign = if forward { 1.0 } else { -1.0 };
        let d = self.direction.scaled(sign);
        let Some(sol) = self.at(x).solve_directional(&self.tol, std::slice::from_ref(&d))? else {
            return Ok(None);
        };
        Self::check(&sol, x)?;
        if !sol.is_optimal() {
            return Ok(None);
        }
        Ok(Some((sol.objective, sign * sol.derivative(&d))))
    }
}

/// The three value functions of a model, with their programs built once.
#[derive(Clone, Debug)]
pub struct ValueFunctions {
    minc: LinearProgram,
    maxur: LinearProgram,
    maxur_free: LinearProgram,
    maxdr: LinearProgram,
    maxdr_free: LinearProgram,
    tol: Tolerances,
}

impl ValueFunctions {
    pub fn new(model: &GridModel, tol: Tolerances) -> Result<Self, ParametricError> {
        Ok(ValueFunctions {
            minc: build_minc_lp(model, 0.0, 0.0)?,
            maxur: build_maxur_lp(model, 0.0, 0.0)?,
            maxur_free: build_maxur_lp(model, f64::INFINITY, 0.0)?,
            maxdr: build_maxdr_lp(model, 0.0, 0.0)?,
            maxdr_free: build_maxdr_lp(model, f64::INFINITY, 0.0)?,
            tol,
        })
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    fn up(lp: &LinearProgram) -> RhsDirection {
        Labels::up_direction(lp)
    }

    fn down(lp: &LinearProgram) -> RhsDirection {
        Labels::down_direction(lp)
    }

    fn budget(lp: &LinearProgram) -> RhsDirection {
        RhsDirection::single(Labels::budget(lp).expect("budgeted program has a budget row"))
    }

    /// `MinC(·, f_d)` as a function of `f_u`.
    pub fn minc_in_up(&self, f_d: f64) -> ParametricLp {
        let lp = self.minc.with_rhs(&shift(&Self::down(&self.minc), f_d));
        ParametricLp::new(lp, Self::up(&self.minc), self.tol)
    }

    /// `MinC(f_u, ·)` as a function of `f_d`.
    pub fn minc_in_down(&self, f_u: f64) -> ParametricLp {
        let lp = self.minc.with_rhs(&shift(&Self::up(&self.minc), f_u));
        ParametricLp::new(lp, Self::down(&self.minc), self.tol)
    }

    /// `MaxUR(θ, ·)` as a function of `f_d`; infinite `θ` drops the budget.
    pub fn maxur_in_down(&self, theta: f64) -> ParametricLp {
        let lp = if theta.is_finite() {
            self.maxur.with_rhs(&shift(&Self::budget(&self.maxur), theta))
        } else {
            self.maxur_free.clone()
        };
        let d = Self::down(&lp);
        ParametricLp::new(lp, d, self.tol)
    }

    /// `MaxUR(·, f_d)` as a function of the budget.
    pub fn maxur_in_budget(&self, f_d: f64) -> ParametricLp {
        let lp = self.maxur.with_rhs(&shift(&Self::down(&self.maxur), f_d));
        ParametricLp::new(lp, Self::budget(&self.maxur), self.tol)
    }

    pub fn maxdr_in_up(&self, theta: f64) -> ParametricLp {
        let lp = if theta.is_finite() {
            self.maxdr.with_rhs(&shift(&Self::budget(&self.maxdr), theta))
        } else {
            self.maxdr_free.clone()
        };
        let d = Self::up(&lp);
        ParametricLp::new(lp, d, self.tol)
    }

    pub fn maxdr_in_budget(&self, f_u: f64) -> ParametricLp {
        let lp = self.maxdr.with_rhs(&shift(&Self::up(&self.maxdr), f_u));
        ParametricLp::new(lp, Self::budget(&self.maxdr), self.tol)
    }

    /// `MinC(f_u, f_d)`, or `None` when the pair is infeasible.
    pub fn minc(&self, f_u: f64, f_d: f64) -> Result<Option<f64>, ParametricError> {
        check_nonnegative(f_u, f_d)?;
        self.minc_in_up(f_d).value(f_u)
    }

    pub fn maxur(&self, theta: f64, f_d: f64) -> Result<Option<f64>, ParametricError> {
        check_nonnegative(theta, f_d)?;
        self.maxur_in_down(theta).value(f_d)
    }

    pub fn maxdr(&self, theta: f64, f_u: f64) -> Result<Option<f64>, ParametricError> {
        check_nonnegative(theta, f_u)?;
        self.maxdr_in_up(theta).value(f_u)
    }

    /// Gradient `(∂/∂f_u, ∂/∂f_d)` of the MinC piece that is active at
    /// `(f_u, f_d)` when moving along `(du, dd)` and then along `(eu, ed)`.
    ///
    /// Returns the value and the gradient, or `None` if the pair is
    /// infeasible or the move leaves the feasible region immediately.
    pub fn minc_piece(
        &self,
        f_u: f64,
        f_d: f64,
        first: (f64, f64),
        second: (f64, f64),
    ) -> Result<Option<(f64, (f64, f64))>, ParametricError> {
        let up = Self::up(&self.minc);
        let down = Self::down(&self.minc);
        let mut updates = shift(&up, f_u);
        updates.extend(shift(&down, f_d));
        let lp = self.minc.with_rhs(&updates);
        let d1 = up.combine(&down, first.0, first.1);
        let d2 = up.combine(&down, second.0, second.1);
        let Some(sol) = lp.solve_directional(&self.tol, &[d1, d2])? else {
            return Ok(None);
        };
        if !sol.is_optimal() {
            return Ok(None);
        }
        Ok(Some((sol.objective, (sol.derivative(&up), sol.derivative(&down)))))
    }
}

fn shift(d: &RhsDirection, x: f64) -> Vec<(ConstraintRef, f64)> {
    d.0.iter().map(|&(c, w)| (c, w * x)).collect()
}

fn check_nonnegative(a: f64, b: f64) -> Result<(), ParametricError> {
    if a < 0.0 || b < 0.0 || a.is_nan() || b.is_nan() {
        return Err(ParametricError::NegativeParameter(a.min(b)));
    }
    Ok(())
}
