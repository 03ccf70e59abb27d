use serde::Serialize;

use super::{EmpiricalErrorDistribution, RiskError};
use crate::format::round9;
use crate::surface::{CostSurface, SurfaceError};

/// Search grid shared by the linear search and the greedy baseline.
///
/// Down awards run `-a, -a - δ, …` clipped at zero; up awards run
/// `0, δ, 2δ, …` clipped at `b`, where `[a, b]` is the support widened to
/// contain zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub delta: f64,
    /// Descending.
    pub down: Vec<f64>,
    /// Ascending.
    pub up: Vec<f64>,
}

impl Grid {
    pub fn new(dist: &EmpiricalErrorDistribution, delta: f64) -> Result<Grid, RiskError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(RiskError::BadStep(delta));
        }
        let (a, b) = dist.search_support();
        Ok(Grid { delta, down: steps(-a, delta).into_iter().map(|k| (-a - k).max(0.0)).collect(), up: steps(b, delta) })
    }

    /// `(b - a) / 200`, or 1 MW for a point mass at zero.
    pub fn default_delta(dist: &EmpiricalErrorDistribution) -> f64 {
        let (a, b) = dist.search_support();
        if b > a {
            (b - a) / 200.0
        } else {
            1.0
        }
    }
}

/// `0, δ, 2δ, …` up to and including `end`.
fn steps(end: f64, delta: f64) -> Vec<f64> {
    let snap = 1e-9 * delta;
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let v = j as f64 * delta;
        if v >= end - snap {
            out.push(end);
            return out;
        }
        out.push(v);
        j += 1;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedyComparison {
    pub f_u: f64,
    pub f_d: f64,
    /// `None` when the pair lies outside the feasible ramping region.
    pub cost: Option<f64>,
    pub ds: Option<f64>,
    pub confidence: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiskDispatchResult {
    pub f_u: f64,
    pub f_d: f64,
    pub cost: f64,
    pub ds: f64,
    pub confidence: f64,
    pub p: f64,
    pub delta: f64,
    /// Confidence evaluations spent by the search.
    pub checks: usize,
    pub outer_iterations: usize,
    /// Covering pairs dropped for lying outside the feasible region.
    pub skipped: usize,
    pub greedy: GreedyComparison,
}

impl RiskDispatchResult {
    pub fn to_json(&self) -> String {
        let mut r = self.clone();
        for v in [&mut r.f_u, &mut r.f_d, &mut r.cost, &mut r.ds, &mut r.confidence, &mut r.p, &mut r.delta] {
            *v = round9(*v);
        }
        let g = &mut r.greedy;
        for v in [&mut g.f_u, &mut g.f_d, &mut g.confidence] {
            *v = round9(*v);
        }
        g.cost = g.cost.map(round9);
        g.ds = g.ds.map(round9);
        serde_json::to_string_pretty(&r).expect("risk result serializes")
    }
}

fn check_p(p: f64) -> Result<(), RiskError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(RiskError::BadConfidence(p))
    }
}

fn covers(dist: &EmpiricalErrorDistribution, f_u: f64, f_d: f64, p: f64) -> bool {
    dist.confidence(f_u, f_d).expect("grid values are nonnegative") >= p
}

/// Shortest covering interval on the grid: minimizes `f_u + f_d`, ties to
/// smaller `f_d`, then smaller `f_u`.
pub fn greedy_dispatch(dist: &EmpiricalErrorDistribution, p: f64, delta: f64) -> Result<(f64, f64), RiskError> {
    check_p(p)?;
    let grid = Grid::new(dist, delta)?;
    let mut best: Option<(f64, f64)> = None;
    let mut j = 0;
    for &fd in &grid.down {
        while j < grid.up.len() && !covers(dist, grid.up[j], fd, p) {
            j += 1;
        }
        let Some(&fu) = grid.up.get(j) else { break };
        let better = match best {
            None => true,
            Some((bu, bd)) => {
                let (s, bs) = (fu + fd, bu + bd);
                s < bs || (s == bs && (fd < bd || (fd == bd && fu < bu)))
            }
        };
        if better {
            best = Some((fu, fd));
        }
    }
    best.ok_or_else(|| RiskError::NoFeasiblePair { p, reason: "the sample support cannot be covered".into() })
}

pub fn risk_dispatch_default(
    surface: &CostSurface,
    dist: &EmpiricalErrorDistribution,
    p: f64,
) -> Result<RiskDispatchResult, RiskError> {
    risk_dispatch(surface, dist, p, Grid::default_delta(dist))
}

/// Cheapest grid pair meeting the confidence requirement, by linear search
/// with a monotone warm start on the up award.
pub fn risk_dispatch(
    surface: &CostSurface,
    dist: &EmpiricalErrorDistribution,
    p: f64,
    delta: f64,
) -> Result<RiskDispatchResult, RiskError> {
    check_p(p)?;
    let grid = Grid::new(dist, delta)?;
    let cost_at = |fu: f64, fd: f64| -> Result<Option<f64>, RiskError> {
        match surface.query(fu, fd) {
            Ok(q) => Ok(Some(q.cost)),
            Err(SurfaceError::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };

    let mut checks = 0;
    let mut outer = 0;
    let mut skipped = 0;
    let mut start = 0;
    let mut opt: Option<(f64, f64, f64)> = None;
    for &fd in &grid.down {
        outer += 1;
        let mut found = false;
        for (j, &fu) in grid.up.iter().enumerate().skip(start) {
            checks += 1;
            if covers(dist, fu, fd, p) {
                start = j;
                found = true;
                match cost_at(fu, fd)? {
                    Some(c) if opt.is_none_or(|(_, _, o)| c <= o) => opt = Some((fu, fd, c)),
                    Some(_) => {}
                    None => skipped += 1,
                }
                break;
            }
        }
        if !found {
            break;
        }
    }

    let Some((f_u, f_d, cost)) = opt else {
        let b = &surface.bounds;
        let reason = if skipped > 0 {
            format!(
                "all {skipped} covering pairs exceed the feasible region (up to {} MW up, {} MW down)",
                round9(b.down_max.hi()),
                round9(b.up_max.hi())
            )
        } else {
            "the sample support cannot be covered".into()
        };
        return Err(RiskError::NoFeasiblePair { p, reason });
    };

    let (gu, gd) = greedy_dispatch(dist, p, delta)?;
    let g_cost = cost_at(gu, gd)?;
    let greedy = GreedyComparison {
        f_u: gu,
        f_d: gd,
        cost: g_cost,
        ds: g_cost.map(|c| c - surface.base_cost),
        confidence: dist.confidence(gu, gd)?,
    };
    Ok(RiskDispatchResult {
        f_u,
        f_d,
        cost,
        ds: cost - surface.base_cost,
        confidence: dist.confidence(f_u, f_d)?,
        p,
        delta,
        checks,
        outer_iterations: outer,
        skipped,
        greedy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::surface::build_surface;

    fn dist(v: &[f64]) -> EmpiricalErrorDistribution {
        EmpiricalErrorDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_is_clipped_at_both_ends() {
        let g = Grid::new(&dist(&[-2.5, 3.0]), 1.0).unwrap();
        assert_eq!(g.down, vec![2.5, 1.5, 0.5, 0.0]);
        assert_eq!(g.up, vec![0.0, 1.0, 2.0, 3.0]);
        let one_sided = Grid::new(&dist(&[2.0, 4.0]), 1.5).unwrap();
        assert_eq!(one_sided.down, vec![0.0]);
        assert_eq!(one_sided.up, vec![0.0, 1.5, 3.0, 4.0]);
        assert!(Grid::new(&dist(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn greedy_small_cases() {
        let sym = dist(&[-7.0, -3.0, 1.0, 7.0]);
        assert_eq!(greedy_dispatch(&sym, 1.0, 0.5).unwrap(), (7.0, 7.0));
        let point = dist(&[10.0]);
        assert_eq!(greedy_dispatch(&point, 0.9, Grid::default_delta(&point)).unwrap(), (10.0, 0.0));
        assert_eq!(greedy_dispatch(&sym, 0.0, 0.5).unwrap(), (0.0, 0.0));
        assert!(greedy_dispatch(&sym, 1.5, 0.5).is_err());
    }

    #[test]
    fn greedy_matches_exhaustive_scan() {
        let samples: Vec<f64> = (-10..=30).map(f64::from).collect();
        let d = dist(&samples);
        let delta = 0.5;
        let g = Grid::new(&d, delta).unwrap();
        let mut oracle: Option<(f64, f64)> = None;
        for &fd in &g.down {
            for &fu in &g.up {
                let c = samples.iter().filter(|&&e| -fd <= e && e <= fu).count() as f64 / samples.len() as f64;
                if c >= 0.95 {
                    let key = (fu + fd, fd, fu);
                    if oracle.is_none_or(|(u, dd)| key < (u + dd, dd, u)) {
                        oracle = Some((fu, fd));
                    }
                }
            }
        }
        assert_eq!(greedy_dispatch(&d, 0.95, delta).unwrap(), oracle.unwrap());
    }

    #[test]
    fn zero_confidence_returns_base() {
        let s = build_surface(&models::three_bus()).unwrap();
        let r = risk_dispatch_default(&s, &dist(&[-20.0, 5.0, 15.0]), 0.0).unwrap();
        assert_eq!((r.f_u, r.f_d), (0.0, 0.0));
        assert_eq!(r.ds, 0.0);
        assert!((r.cost - 12400.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_two_point_needs_both_sides() {
        let s = build_surface(&models::three_bus()).unwrap();
        let d = dist(&[-20.0, 20.0]);
        let r = risk_dispatch(&s, &d, 1.0, 1.0).unwrap();
        assert_eq!((r.f_u, r.f_d), (20.0, 20.0));
        assert_eq!((r.greedy.f_u, r.greedy.f_d), (20.0, 20.0));
        assert_eq!(r.confidence, 1.0);
    }

    #[test]
    fn pairs_outside_region_are_skipped() {
        let s = build_surface(&models::three_bus()).unwrap();
        let err = risk_dispatch(&s, &dist(&[-80.0, 80.0]), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, RiskError::NoFeasiblePair { .. }), "{err}");
        assert!(err.to_string().contains("feasible region"));
    }
}
