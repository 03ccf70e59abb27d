use serde::Serialize;

use super::{compute_shift_factors, GridError, GridModel};
use crate::format::round9;
use crate::lp::{ConstraintRef, LinearProgram, LpBuilder, LpSolution, LpStatus, RhsDirection, Sense};
use crate::tolerance::Tolerances;

/// Constraint labels shared by every program built here.
pub struct Labels;

impl Labels {
    pub const BUDGET: &'static str = "budget";
    pub const RAMP_UP: &'static str = "ramp_up[";
    pub const RAMP_DOWN: &'static str = "ramp_down[";

    pub fn ramp_up(t: usize) -> String {
        format!("ramp_up[{t}]")
    }

    pub fn ramp_down(t: usize) -> String {
        format!("ramp_down[{t}]")
    }

    /// Direction raising every up-ramp requirement row by one unit.
    pub fn up_direction(lp: &LinearProgram) -> RhsDirection {
        RhsDirection(lp.refs_with_prefix(Self::RAMP_UP).into_iter().map(|c| (c, 1.0)).collect())
    }

    pub fn down_direction(lp: &LinearProgram) -> RhsDirection {
        RhsDirection(lp.refs_with_prefix(Self::RAMP_DOWN).into_iter().map(|c| (c, 1.0)).collect())
    }

    pub fn budget(lp: &LinearProgram) -> Option<ConstraintRef> {
        lp.ineq_index(Self::BUDGET).map(ConstraintRef::Ineq)
    }
}

#[derive(Clone, Copy)]
enum Objective {
    MinCost { fu: f64, fd: f64 },
    MaxUp { theta: f64, fd: f64 },
    MaxDown { theta: f64, fu: f64 },
}

/// Variable indices: `g[n][t]`, and `ru[n][t-1]`, `rd[n][t-1]` for `t >= 1`.
struct Layout {
    g: Vec<Vec<usize>>,
    ru: Vec<Vec<usize>>,
    rd: Vec<Vec<usize>>,
}

fn check_nonnegative(name: &str, v: f64) -> Result<(), GridError> {
    if v.is_nan() || v < 0.0 {
        return Err(GridError::NegativeParameter(format!("{name} = {v}")));
    }
    Ok(())
}

fn assemble(model: &GridModel, objective: Objective) -> Result<(LinearProgram, Layout), GridError> {
    let h = compute_shift_factors(model)?;
    let horizon = model.horizon;
    let sense = match objective {
        Objective::MinCost { .. } => Sense::Minimize,
        _ => Sense::Maximize,
    };
    let minimizing = matches!(objective, Objective::MinCost { .. });
    let mut b = LpBuilder::new(sense);

    let mut layout = Layout { g: Vec::new(), ru: Vec::new(), rd: Vec::new() };
    let mut cost_terms = Vec::new();
    for gen in &model.generators {
        let g: Vec<usize> = (0..horizon)
            .map(|t| b.add_var(format!("g[{},{t}]", gen.id), 0.0, gen.g_min, gen.g_max))
            .collect();
        let ru: Vec<usize> =
            (1..horizon).map(|t| b.add_var(format!("ru[{},{t}]", gen.id), 0.0, 0.0, f64::INFINITY)).collect();
        let rd: Vec<usize> =
            (1..horizon).map(|t| b.add_var(format!("rd[{},{t}]", gen.id), 0.0, 0.0, f64::INFINITY)).collect();
        cost_terms.extend(g.iter().map(|&v| (v, gen.energy_bid)));
        cost_terms.extend(ru.iter().map(|&v| (v, gen.ramp_up_bid)));
        cost_terms.extend(rd.iter().map(|&v| (v, gen.ramp_down_bid)));
        layout.g.push(g);
        layout.ru.push(ru);
        layout.rd.push(rd);
    }
    cost_terms.retain(|&(_, c)| c != 0.0);
    if minimizing {
        for &(v, c) in &cost_terms {
            b.set_cost(v, c);
        }
    }

    for t in 0..horizon {
        let terms = layout.g.iter().map(|g| (g[t], 1.0)).collect();
        b.add_eq(format!("balance[{t}]"), terms, model.total_load(t));
    }

    for (l, line) in model.lines.iter().enumerate() {
        let Some(cap) = line.capacity else { continue };
        for t in 0..horizon {
            let terms: Vec<(usize, f64)> = model
                .generators
                .iter()
                .zip(&layout.g)
                .map(|(gen, g)| (g[t], h.factor(l, model.bus_index(gen.bus).unwrap())))
                .filter(|&(_, f)| f.abs() > 1e-12)
                .collect();
            let load_flow: f64 = model.loads[t].iter().enumerate().map(|(i, d)| h.factor(l, i) * d).sum();
            let neg = terms.iter().map(|&(v, f)| (v, -f)).collect();
            b.add_le(format!("flow+[{l},{t}]"), terms, cap + load_flow);
            b.add_le(format!("flow-[{l},{t}]"), neg, cap - load_flow);
        }
    }

    let (fu, fd) = match objective {
        Objective::MinCost { fu, fd } => (Some(fu), Some(fd)),
        Objective::MaxUp { fd, .. } => (None, Some(fd)),
        Objective::MaxDown { fu, .. } => (Some(fu), None),
    };
    let level = (!minimizing).then(|| b.add_var("F", 1.0, 0.0, f64::INFINITY));
    for t in 1..horizon {
        let mut up: Vec<(usize, f64)> = layout.ru.iter().map(|r| (r[t - 1], 1.0)).collect();
        let mut down: Vec<(usize, f64)> = layout.rd.iter().map(|r| (r[t - 1], 1.0)).collect();
        match (fu, level) {
            (Some(v), _) => b.add_eq(Labels::ramp_up(t), up, v),
            (None, Some(f)) => {
                up.push((f, -1.0));
                b.add_eq(Labels::ramp_up(t), up, 0.0)
            }
            (None, None) => unreachable!(),
        };
        match (fd, level) {
            (Some(v), _) => b.add_eq(Labels::ramp_down(t), down, v),
            (None, Some(f)) => {
                down.push((f, -1.0));
                b.add_eq(Labels::ramp_down(t), down, 0.0)
            }
            (None, None) => unreachable!(),
        };
    }

    for (n, gen) in model.generators.iter().enumerate() {
        let (g, ru, rd) = (&layout.g[n], &layout.ru[n], &layout.rd[n]);
        for t in 1..horizon {
            b.add_le(format!("head_up[{},{t}]", gen.id), vec![(g[t], 1.0), (ru[t - 1], 1.0)], gen.g_max);
            b.add_ge(format!("head_down[{},{t}]", gen.id), vec![(g[t], 1.0), (rd[t - 1], -1.0)], gen.g_min);
        }
        let dg = gen.ramp_limit;
        b.add_le(format!("anchor+[{}]", gen.id), vec![(g[0], 1.0)], gen.initial_output + dg);
        b.add_ge(format!("anchor-[{}]", gen.id), vec![(g[0], 1.0)], gen.initial_output - dg);
        for t in 0..horizon - 1 {
            // |g[t+1] - g[t] + ru[t+1] + rd[t]| <= dg, and
            // |g[t+1] - g[t] - rd[t+1] - ru[t]| <= dg; no awards exist at t = 0.
            let mut up = vec![(g[t + 1], 1.0), (g[t], -1.0), (ru[t], 1.0)];
            let mut down = vec![(g[t + 1], 1.0), (g[t], -1.0), (rd[t], -1.0)];
            if t > 0 {
                up.push((rd[t - 1], 1.0));
                down.push((ru[t - 1], -1.0));
            }
            b.add_le(format!("ramp_lim_up+[{},{t}]", gen.id), up.clone(), dg);
            b.add_ge(format!("ramp_lim_up-[{},{t}]", gen.id), up, -dg);
            b.add_le(format!("ramp_lim_down+[{},{t}]", gen.id), down.clone(), dg);
            b.add_ge(format!("ramp_lim_down-[{},{t}]", gen.id), down, -dg);
        }
    }

    match objective {
        Objective::MaxUp { theta, .. } | Objective::MaxDown { theta, .. } if theta.is_finite() => {
            b.add_le(Labels::BUDGET, cost_terms, theta);
        }
        _ => {}
    }
    Ok((b.build()?, layout))
}

/// Minimum-cost dispatch with every period's up/down awards pinned to
/// `f_u`/`f_d`.
pub fn build_minc_lp(model: &GridModel, f_u: f64, f_d: f64) -> Result<LinearProgram, GridError> {
    check_nonnegative("f_u", f_u)?;
    check_nonnegative("f_d", f_d)?;
    Ok(assemble(model, Objective::MinCost { fu: f_u, fd: f_d })?.0)
}

/// Largest up-ramp award reachable with cost at most `theta` and down award
/// `f_d`. `theta = f64::INFINITY` drops the budget row.
pub fn build_maxur_lp(model: &GridModel, theta: f64, f_d: f64) -> Result<LinearProgram, GridError> {
    check_nonnegative("theta", theta)?;
    check_nonnegative("f_d", f_d)?;
    Ok(assemble(model, Objective::MaxUp { theta, fd: f_d })?.0)
}

pub fn build_maxdr_lp(model: &GridModel, theta: f64, f_u: f64) -> Result<LinearProgram, GridError> {
    check_nonnegative("theta", theta)?;
    check_nonnegative("f_u", f_u)?;
    Ok(assemble(model, Objective::MaxDown { theta, fu: f_u })?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct DispatchSolution {
    pub status: LpStatus,
    pub generators: Vec<String>,
    /// `g[n][t]`, MW.
    pub g: Vec<Vec<f64>>,
    /// `r_up[n][t-1]` for periods `1..T`, MW.
    pub r_up: Vec<Vec<f64>>,
    pub r_down: Vec<Vec<f64>>,
    pub objective: Option<f64>,
    /// Sensitivity of the objective to `f_u` (summed over periods).
    pub dual_up: Option<f64>,
    pub dual_down: Option<f64>,
}

impl DispatchSolution {
    fn from_lp(model: &GridModel, lp: &LinearProgram, layout: &Layout, sol: &LpSolution) -> Self {
        let generators = model.generators.iter().map(|g| g.id.clone()).collect();
        if !sol.is_optimal() {
            return DispatchSolution {
                status: sol.status,
                generators,
                g: Vec::new(),
                r_up: Vec::new(),
                r_down: Vec::new(),
                objective: None,
                dual_up: None,
                dual_down: None,
            };
        }
        let pick = |idx: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
            idx.iter().map(|row| row.iter().map(|&v| sol.primal[v]).collect()).collect()
        };
        DispatchSolution {
            status: sol.status,
            generators,
            g: pick(&layout.g),
            r_up: pick(&layout.ru),
            r_down: pick(&layout.rd),
            objective: Some(sol.objective),
            dual_up: Some(sol.derivative(&Labels::up_direction(lp))),
            dual_down: Some(sol.derivative(&Labels::down_direction(lp))),
        }
    }

    /// Pretty JSON with every value rounded to nine significant digits.
    pub fn to_json(&self) -> String {
        let round_all = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter().map(|row| row.iter().map(|&v| round9(v)).collect()).collect()
        };
        let export = DispatchSolution {
            status: self.status,
            generators: self.generators.clone(),
            g: round_all(&self.g),
            r_up: round_all(&self.r_up),
            r_down: round_all(&self.r_down),
            objective: self.objective.map(round9),
            dual_up: self.dual_up.map(round9),
            dual_down: self.dual_down.map(round9),
        };
        serde_json::to_string_pretty(&export).expect("dispatch solution serializes")
    }

    /// Largest violation of the generator-level constraints (capacity,
    /// headroom, anchoring, ramp limits, award signs), recomputed from the
    /// reported values. Zero for a non-optimal solution.
    pub fn max_violation(&self, model: &GridModel) -> f64 {
        if self.status != LpStatus::Optimal {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        let mut bump = |excess: f64| worst = worst.max(excess);
        for (n, gen) in model.generators.iter().enumerate() {
            let (g, ru, rd) = (&self.g[n], &self.r_up[n], &self.r_down[n]);
            let r = |v: &Vec<f64>, t: usize| if t == 0 { 0.0 } else { v[t - 1] };
            for t in 0..model.horizon {
                bump(gen.g_min - g[t]);
                bump(g[t] - gen.g_max);
                bump(g[t] + r(ru, t) - gen.g_max);
                bump(gen.g_min - (g[t] - r(rd, t)));
                bump(-r(ru, t));
                bump(-r(rd, t));
            }
            bump((g[0] - gen.initial_output).abs() - gen.ramp_limit);
            for t in 0..model.horizon - 1 {
                let step = g[t + 1] - g[t];
                bump((step + r(ru, t + 1) + r(rd, t)).abs() - gen.ramp_limit);
                bump((step - r(rd, t + 1) - r(ru, t)).abs() - gen.ramp_limit);
            }
        }
        for t in 0..model.horizon {
            let total: f64 = self.g.iter().map(|g| g[t]).sum();
            bump((total - model.total_load(t)).abs());
        }
        worst
    }
}

pub fn solve_dispatch(model: &GridModel, f_u: f64, f_d: f64) -> Result<DispatchSolution, GridError> {
    solve_dispatch_with(model, f_u, f_d, &Tolerances::default())
}

pub fn solve_dispatch_with(
    model: &GridModel,
    f_u: f64,
    f_d: f64,
    tol: &Tolerances,
) -> Result<DispatchSolution, GridError> {
    check_nonnegative("f_u", f_u)?;
    check_nonnegative("f_d", f_d)?;
    let (lp, layout) = assemble(model, Objective::MinCost { fu: f_u, fd: f_d })?;
    let sol = lp.solve_with(tol)?;
    Ok(DispatchSolution::from_lp(model, &lp, &layout, &sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn three_bus_economic_dispatch() {
        let m = models::three_bus();
        let s = solve_dispatch(&m, 0.0, 0.0).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let at = |t: usize| -> Vec<f64> { s.g.iter().map(|g| g[t]).collect() };
        for (got, want) in at(0).iter().zip([100.0, 0.0, 10.0]) {
            assert!((got - want).abs() < 1e-7);
        }
        for (got, want) in at(1).iter().zip([100.0, 0.0, 20.0]) {
            assert!((got - want).abs() < 1e-7);
        }
        // 50*100 + 80*10 + 50*100 + 80*20
        assert!((s.objective.unwrap() - 12400.0).abs() < 1e-6);
        assert!(s.max_violation(&m) < 1e-7);
    }

    #[test]
    fn requirement_beyond_total_ramp_is_infeasible() {
        let m = models::three_bus();
        let total: f64 = m.generators.iter().map(|g| g.ramp_limit).sum();
        let s = solve_dispatch(&m, total + 1.0, 0.0).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.objective.is_none());
    }

    #[test]
    fn negative_parameters_are_rejected() {
        let m = models::three_bus();
        assert!(matches!(build_minc_lp(&m, -1.0, 0.0), Err(GridError::NegativeParameter(_))));
        assert!(matches!(build_maxur_lp(&m, 1.0, -1.0), Err(GridError::NegativeParameter(_))));
        assert!(matches!(build_maxdr_lp(&m, -1.0, 0.0), Err(GridError::NegativeParameter(_))));
    }

    #[test]
    fn free_ramping_capacities() {
        let m = models::three_bus();
        let up = build_maxur_lp(&m, 12400.0, 0.0).unwrap().solve().unwrap();
        let down = build_maxdr_lp(&m, 12400.0, 0.0).unwrap().solve().unwrap();
        assert!((up.objective - 30.0).abs() < 1e-7);
        assert!((down.objective - 40.0).abs() < 1e-7);
    }

    // Bracket the largest feasible f_u by bisection on MinC feasibility and
    // compare with the unbudgeted MaxUR optimum.
    #[test]
    fn unbudgeted_max_up_matches_feasibility_bisection() {
        let m = models::three_bus();
        let feasible = |fu: f64| build_minc_lp(&m, fu, 0.0).unwrap().solve().unwrap().is_optimal();
        let (mut lo, mut hi) = (0.0, 200.0);
        assert!(feasible(lo) && !feasible(hi));
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let max = build_maxur_lp(&m, f64::INFINITY, 0.0).unwrap().solve().unwrap().objective;
        assert!((max - lo).abs() < 1e-6, "{max} vs {lo}");
    }

    #[test]
    fn budget_binds_in_max_up() {
        let m = models::three_bus();
        let lp = build_maxur_lp(&m, 13000.0, 10.0).unwrap();
        let s = lp.solve().unwrap();
        let budget = Labels::budget(&lp).unwrap();
        let ConstraintRef::Ineq(i) = budget else { unreachable!() };
        let spent: f64 = lp.inequalities()[i].coeffs.iter().zip(&s.primal).map(|(c, x)| c * x).sum();
        assert!(s.dual(budget) > 0.0);
        assert!((spent - 13000.0).abs() < 1e-7);
    }

    #[test]
    fn line_limits_enter_through_shift_factors() {
        let mut m = models::garver6();
        let base = solve_dispatch(&m, 0.0, 0.0).unwrap().objective.unwrap();
        for l in &mut m.lines {
            l.capacity = None;
        }
        let free = solve_dispatch(&m, 0.0, 0.0).unwrap().objective.unwrap();
        assert!(free <= base + 1e-9);
    }
}
