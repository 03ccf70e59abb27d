use serde::Serialize;

use super::family::ValueFunctions;
use super::pwl::{Monotonicity, Orientation, PiecewiseLinearFn};
use super::slice::construct_family_slice;
use super::ParametricError;

/// Feasible and interesting ranges of the ramping parameters.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibleBounds {
    pub base_cost: f64,
    /// `f̄^u(f_d)`: largest feasible `f_u` given `f_d`, on `[0, f̄^d(0)]`.
    pub up_max: PiecewiseLinearFn,
    /// `f̄^d(f_u)` on `[0, f̄^u(0)]`.
    pub down_max: PiecewiseLinearFn,
    /// `f̲^u(f_d)`: largest `f_u` available without raising cost, on `[0, f̲^d(0)]`.
    pub up_min: PiecewiseLinearFn,
    pub down_min: PiecewiseLinearFn,
    /// Largest MinC over the feasible region and where it is attained.
    pub theta_max: f64,
    pub argmax: (f64, f64),
}

impl FeasibleBounds {
    /// Whether `(f_u, f_d)` lies in the feasible region, with slack `eps`.
    pub fn contains(&self, f_u: f64, f_d: f64, eps: f64) -> bool {
        if f_u < -eps || f_d < -eps || f_d > self.up_max.hi() + eps || f_u > self.down_max.hi() + eps {
            return false;
        }
        let cap = self.up_max.eval(f_d.clamp(0.0, self.up_max.hi())).unwrap();
        f_u <= cap + eps
    }

    /// Whether `(f_u, f_d)` is inside the zero-distortion region.
    pub fn is_free(&self, f_u: f64, f_d: f64, eps: f64) -> bool {
        if f_u < -eps || f_d < -eps || f_d > self.up_min.hi() + eps {
            return false;
        }
        f_u <= self.up_min.eval(f_d.clamp(0.0, self.up_min.hi())).unwrap() + eps
    }

    /// Corners of the feasible region, counter-clockwise from the origin.
    pub fn region_vertices(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0)];
        for (fd, fu) in self.up_max.points() {
            out.push((fu, fd));
        }
        out.push((0.0, self.up_max.hi()));
        dedup_ring(out, 1e-9 * self.scale())
    }

    fn scale(&self) -> f64 {
        self.up_max.hi().max(self.down_max.hi()).max(1.0)
    }
}

fn dedup_ring(pts: Vec<(f64, f64)>, eps: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|q| (q.0 - p.0).abs() > eps || (q.1 - p.1).abs() > eps) {
            out.push(p);
        }
    }
    while out.len() > 1 {
        let (f, l) = (out[0], *out.last().unwrap());
        if (f.0 - l.0).abs() <= eps && (f.1 - l.1).abs() <= eps {
            out.pop();
        } else {
            break;
        }
    }
    out
}

/// Boundary curves, base cost and the maximal cost over the region.
pub fn feasible_bounds(vf: &ValueFunctions) -> Result<FeasibleBounds, ParametricError> {
    let base_cost = vf.minc(0.0, 0.0)?.ok_or(ParametricError::BaseInfeasible)?;
    let boundary = |theta: f64, up: bool| -> Result<PiecewiseLinearFn, ParametricError> {
        let (at_zero, family) = if up {
            (vf.maxdr(theta, 0.0)?, vf.maxur_in_down(theta))
        } else {
            (vf.maxur(theta, 0.0)?, vf.maxdr_in_up(theta))
        };
        let hi = at_zero.ok_or(ParametricError::BaseInfeasible)?;
        let slice = construct_family_slice(&family, 0.0, hi, Orientation::Concave, Monotonicity::Nonincreasing)?;
        Ok(slice.function)
    };
    let up_max = boundary(f64::INFINITY, true)?;
    let down_max = boundary(f64::INFINITY, false)?;
    // A zero budget is infeasible under positive load; "no extra cost" is
    // read as a budget equal to the base cost.
    let up_min = boundary(base_cost, true)?;
    let down_min = boundary(base_cost, false)?;

    let mut bounds = FeasibleBounds {
        base_cost,
        up_max,
        down_max,
        up_min,
        down_min,
        theta_max: base_cost,
        argmax: (0.0, 0.0),
    };
    let scale = bounds.scale();
    for (fu, fd) in bounds.region_vertices() {
        let fu = fu.max(0.0);
        let fd = fd.max(0.0);
        let v = match vf.minc(fu, fd)? {
            Some(v) => v,
            None => match nudged(vf, fu, fd, scale)? {
                Some(v) => v,
                None => continue,
            },
        };
        if v > bounds.theta_max + vf.tolerances().val_tol(v) {
            bounds.theta_max = v;
            bounds.argmax = (fu, fd);
        }
    }
    Ok(bounds)
}

/// MinC at a boundary vertex that is infeasible only through rounding.
fn nudged(vf: &ValueFunctions, fu: f64, fd: f64, scale: f64) -> Result<Option<f64>, ParametricError> {
    let back = 1e-9 * scale;
    vf.minc((fu - back).max(0.0), (fd - back).max(0.0))
}
