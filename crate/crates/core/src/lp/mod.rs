//! Linear-program representation and the solver contract.
//!
//! A [`LinearProgram`] is immutable once built; callers that need to move a
//! right-hand side (parametric slices do this constantly) clone it and use
//! [`LinearProgram::with_rhs`]. Every [`LpSolution`] carries one dual per
//! constraint, reported as the sensitivity of the optimal objective to that
//! constraint's right-hand side under the program's own sense.

mod simplex;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::Tolerances;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub label: String,
    pub cost: f64,
    pub lower: f64,
    /// `f64::INFINITY` for no upper bound.
    pub upper: f64,
}

/// One row. Equalities read `coeffs · x = rhs`, inequalities `coeffs · x <= rhs`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Names a constraint of a program by kind and position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintRef {
    Eq(usize),
    Ineq(usize),
}

/// A direction in right-hand-side space: sparse list of (constraint, weight).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RhsDirection(pub Vec<(ConstraintRef, f64)>);

impl RhsDirection {
    pub fn single(c: ConstraintRef) -> Self {
        RhsDirection(vec![(c, 1.0)])
    }

    pub fn scaled(&self, k: f64) -> Self {
        RhsDirection(self.0.iter().map(|&(c, w)| (c, w * k)).collect())
    }

    pub fn combine(&self, other: &RhsDirection, a: f64, b: f64) -> Self {
        let mut out = self.scaled(a).0;
        out.extend(other.scaled(b).0);
        RhsDirection(out)
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    variables: Vec<Variable>,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(
        sense: Sense,
        variables: Vec<Variable>,
        equalities: Vec<Constraint>,
        inequalities: Vec<Constraint>,
    ) -> Result<Self, LpError> {
        let n = variables.len();
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.label.as_str()) {
                return Err(LpError::Malformed(format!("duplicate variable label {}", v.label)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(LpError::Malformed(format!("non-numeric data on variable {}", v.label)));
            }
            if v.lower > v.upper {
                return Err(LpError::Malformed(format!(
                    "variable {}: lower bound {} exceeds upper bound {}",
                    v.label, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {} has an empty domain", v.label)));
            }
        }
        let mut seen = HashSet::new();
        for (kind, rows) in [("equality", &equalities), ("inequality", &inequalities)] {
            for row in rows {
                if !seen.insert((kind, row.label.as_str())) {
                    return Err(LpError::Malformed(format!("duplicate {kind} label {}", row.label)));
                }
                if row.coeffs.len() != n {
                    return Err(LpError::Malformed(format!(
                        "{kind} {} has {} coefficients, expected {n}",
                        row.label,
                        row.coeffs.len()
                    )));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(LpError::Malformed(format!("{kind} {} has non-finite data", row.label)));
                }
            }
        }
        Ok(LinearProgram { sense, variables, equalities, inequalities })
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, label: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.label == label)
    }

    pub fn eq_index(&self, label: &str) -> Option<usize> {
        self.equalities.iter().position(|c| c.label == label)
    }

    pub fn ineq_index(&self, label: &str) -> Option<usize> {
        self.inequalities.iter().position(|c| c.label == label)
    }

    /// Every constraint whose label starts with `prefix`.
    pub fn refs_with_prefix(&self, prefix: &str) -> Vec<ConstraintRef> {
        let eqs = self
            .equalities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.label.starts_with(prefix))
            .map(|(i, _)| ConstraintRef::Eq(i));
        let ineqs = self
            .inequalities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.label.starts_with(prefix))
            .map(|(i, _)| ConstraintRef::Ineq(i));
        eqs.chain(ineqs).collect()
    }

    pub fn rhs(&self, c: ConstraintRef) -> f64 {
        match c {
            ConstraintRef::Eq(i) => self.equalities[i].rhs,
            ConstraintRef::Ineq(i) => self.inequalities[i].rhs,
        }
    }

    pub fn set_rhs(&mut self, c: ConstraintRef, value: f64) {
        match c {
            ConstraintRef::Eq(i) => self.equalities[i].rhs = value,
            ConstraintRef::Ineq(i) => self.inequalities[i].rhs = value,
        }
    }

    /// Copy of the program with the listed right-hand sides replaced.
    pub fn with_rhs(&self, updates: &[(ConstraintRef, f64)]) -> LinearProgram {
        let mut lp = self.clone();
        for &(c, v) in updates {
            lp.set_rhs(c, v);
        }
        lp
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&Tolerances::default())
    }

    pub fn solve_with(&self, tol: &Tolerances) -> Result<LpSolution, LpError> {
        simplex::solve(self, tol)
    }

    /// Solve and then move to an optimal basis that stays optimal along the
    /// lexicographic ray `rhs + t·d1 + t²·d2 + …` for small `t > 0`.
    ///
    /// The duals of the returned solution then give exact one-sided
    /// derivatives: `solution.derivative(d1)` is the right-derivative of the
    /// optimal value along `d1`. Returns `Ok(None)` when the program is
    /// optimal at `rhs` but infeasible for every `t > 0` along the ray.
    pub fn solve_directional(
        &self,
        tol: &Tolerances,
        directions: &[RhsDirection],
    ) -> Result<Option<LpSolution>, LpError> {
        simplex::solve_directional(self, tol, directions)
    }
}

/// Incremental construction with labels; `build` validates.
#[derive(Debug)]
pub struct LpBuilder {
    sense: Sense,
    variables: Vec<Variable>,
    equalities: Vec<(String, Vec<(usize, f64)>, f64)>,
    inequalities: Vec<(String, Vec<(usize, f64)>, f64)>,
}

impl LpBuilder {
    pub fn new(sense: Sense) -> Self {
        LpBuilder { sense, variables: Vec::new(), equalities: Vec::new(), inequalities: Vec::new() }
    }

    pub fn add_var(&mut self, label: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable { label: label.into(), cost, lower, upper });
        self.variables.len() - 1
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.variables[var].cost = cost;
    }

    pub fn add_eq(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.equalities.push((label.into(), terms, rhs));
        self.equalities.len() - 1
    }

    pub fn add_le(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.inequalities.push((label.into(), terms, rhs));
        self.inequalities.len() - 1
    }

    /// `terms · x >= rhs`, stored as `-terms · x <= -rhs`.
    pub fn add_ge(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        let neg = terms.into_iter().map(|(i, c)| (i, -c)).collect();
        self.add_le(label, neg, -rhs)
    }

    pub fn build(self) -> Result<LinearProgram, LpError> {
        let n = self.variables.len();
        let densify = |rows: Vec<(String, Vec<(usize, f64)>, f64)>| -> Result<Vec<Constraint>, LpError> {
            rows.into_iter()
                .map(|(label, terms, rhs)| {
                    let mut coeffs = vec![0.0; n];
                    for (i, c) in terms {
                        if i >= n {
                            return Err(LpError::Malformed(format!(
                                "constraint {label} references variable {i} of {n}"
                            )));
                        }
                        coeffs[i] += c;
                    }
                    Ok(Constraint { label, coeffs, rhs })
                })
                .collect()
        };
        let eqs = densify(self.equalities)?;
        let ineqs = densify(self.inequalities)?;
        LinearProgram::new(self.sense, self.variables, eqs, ineqs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless optimal.
    pub primal: Vec<f64>,
    /// NaN unless optimal.
    pub objective: f64,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn non_optimal(status: LpStatus) -> Self {
        LpSolution { status, primal: Vec::new(), objective: f64::NAN, eq_duals: Vec::new(), ineq_duals: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn dual(&self, c: ConstraintRef) -> f64 {
        match c {
            ConstraintRef::Eq(i) => self.eq_duals[i],
            ConstraintRef::Ineq(i) => self.ineq_duals[i],
        }
    }

    /// Linear prediction of the objective change along `d` from the duals.
    pub fn derivative(&self, d: &RhsDirection) -> f64 {
        d.0.iter().map(|&(c, w)| w * self.dual(c)).sum()
    }
}
