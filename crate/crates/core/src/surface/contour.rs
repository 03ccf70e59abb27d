use serde::Serialize;

use super::SurfaceError;
use crate::format::fmt9;
use crate::grid::GridModel;
use crate::parametric::{
    construct_family_slice, feasible_bounds, Monotonicity, Orientation, ParametricError, PiecewiseLinearFn,
    ValueFunctions,
};
use crate::tolerance::Tolerances;

#[derive(Clone, Debug, Serialize)]
pub struct ContourLine {
    pub level: f64,
    /// `(f_u, f_d)` in increasing `f_d`.
    pub points: Vec<(f64, f64)>,
    /// `f_d ↦ MaxUR(level, f_d)`.
    #[serde(skip)]
    pub slice: PiecewiseLinearFn,
}

impl ContourLine {
    pub fn segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_u,f_d\n");
        for &(u, d) in &self.points {
            out.push_str(&format!("{},{}\n", fmt9(u), fmt9(d)));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    pub lines: Vec<ContourLine>,
    /// LP solves spent across all levels.
    pub solves: usize,
}

impl ContourSet {
    /// Single CSV with a level column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,f_u,f_d\n");
        for line in &self.lines {
            for &(u, d) in &line.points {
                out.push_str(&format!("{},{},{}\n", fmt9(line.level), fmt9(u), fmt9(d)));
            }
        }
        out
    }
}

pub fn contour(model: &GridModel, k: usize) -> Result<ContourSet, SurfaceError> {
    contour_with(model, k, Tolerances::default())
}

/// `k` equally spaced cost levels from the base cost to the maximum, each
/// traced as the graph of `MaxUR(level, ·)` over `[0, MaxDR(level, 0)]`.
pub fn contour_with(model: &GridModel, k: usize, tol: Tolerances) -> Result<ContourSet, SurfaceError> {
    if k < 2 {
        return Err(SurfaceError::TooFewLevels(k));
    }
    let vf = ValueFunctions::new(model, tol)?;
    let bounds = feasible_bounds(&vf).map_err(|e| match e {
        ParametricError::BaseInfeasible => SurfaceError::BaseInfeasible,
        other => other.into(),
    })?;
    let (base, top) = (bounds.base_cost, bounds.theta_max);
    if top - base <= tol.val_tol(top) {
        log::warn!("no cost spread between base and maximum; contour is empty");
        return Ok(ContourSet { levels: Vec::new(), lines: Vec::new(), solves: 0 });
    }
    let mut lines = Vec::with_capacity(k);
    let mut solves = 0;
    for i in 0..k {
        let level = if i == k - 1 { top } else { base + (top - base) * i as f64 / (k - 1) as f64 };
        let fd_axis = vf.maxdr(level, 0.0)?.ok_or(SurfaceError::BaseInfeasible)?.max(0.0);
        let family = vf.maxur_in_down(level);
        let slice = construct_family_slice(&family, 0.0, fd_axis, Orientation::Concave, Monotonicity::Nonincreasing)?;
        solves += slice.solves + 1;
        let points = slice.function.points().map(|(fd, fu)| (fu.max(0.0), fd)).collect();
        lines.push(ContourLine { level, points, slice: slice.function });
    }
    Ok(ContourSet { levels: lines.iter().map(|l| l.level).collect(), lines, solves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn three_bus_contour_lines_have_few_segments() {
        let set = contour(&models::three_bus(), 30).unwrap();
        assert_eq!(set.lines.len(), 30);
        assert!((set.levels[0] - 12400.0).abs() < 1e-6);
        assert!((set.levels[29] - 15200.0).abs() < 1e-6);
        for line in &set.lines {
            assert!(line.segments() <= 3, "level {} has {} segments", line.level, line.segments());
        }
    }

    #[test]
    fn base_level_traces_free_boundary() {
        let set = contour(&models::three_bus(), 2).unwrap();
        let base = &set.lines[0];
        assert_eq!(base.points.len(), 2);
        assert!((base.points[0].0 - 30.0).abs() < 1e-7 && base.points[0].1.abs() < 1e-9);
        assert!((base.points[1].0 - 30.0).abs() < 1e-7 && (base.points[1].1 - 40.0).abs() < 1e-7);
        assert!(base.to_csv().starts_with("f_u,f_d\n30,0\n"));
    }

    #[test]
    fn needs_two_levels() {
        assert!(matches!(contour(&models::three_bus(), 1), Err(SurfaceError::TooFewLevels(1))));
    }
}
