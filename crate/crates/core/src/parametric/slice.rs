use serde::{Deserialize, Serialize};

use super::family::{ParametricLp, ValueFunctions};
use super::pwl::{Monotonicity, Orientation, PiecewiseLinearFn};
use super::ParametricError;

const MAX_DEPTH: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueFunction {
    MinC,
    MaxUR,
    MaxDR,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Argument {
    Up,
    Down,
    Budget,
}

/// One-dimensional slice of a value function.
///
/// Valid combinations: `MinC` varying `Up` (fixed `f_d`) or `Down` (fixed
/// `f_u`); `MaxUR` varying `Down` (fixed budget, may be infinite) or `Budget`
/// (fixed `f_d`); `MaxDR` varying `Up` or `Budget` likewise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub function: ValueFunction,
    pub vary: Argument,
    pub fixed: f64,
    pub lo: f64,
    pub hi: f64,
}

/// A constructed slice with construction statistics.
#[derive(Clone, Debug)]
pub struct Slice {
    pub function: PiecewiseLinearFn,
    /// LP solves spent.
    pub solves: usize,
    /// Intervals closed by the depth or width cap instead of an exact test.
    pub capped: usize,
}

impl SliceSpec {
    fn shape(&self) -> Result<(Orientation, Monotonicity), ParametricError> {
        use Argument::*;
        use ValueFunction::*;
        match (self.function, self.vary) {
            (MinC, Up | Down) => Ok((Orientation::Convex, Monotonicity::Nondecreasing)),
            (MaxUR, Down) | (MaxDR, Up) => Ok((Orientation::Concave, Monotonicity::Nonincreasing)),
            (MaxUR | MaxDR, Budget) => Ok((Orientation::Concave, Monotonicity::Nondecreasing)),
            (f, a) => Err(ParametricError::InvalidSpec(format!("{f:?} cannot vary {a:?}"))),
        }
    }

    fn family(&self, vf: &ValueFunctions) -> ParametricLp {
        use Argument::*;
        use ValueFunction::*;
        match (self.function, self.vary) {
            (MinC, Up) => vf.minc_in_up(self.fixed),
            (MinC, Down) => vf.minc_in_down(self.fixed),
            (MaxUR, Down) => vf.maxur_in_down(self.fixed),
            (MaxUR, Budget) => vf.maxur_in_budget(self.fixed),
            (MaxDR, Up) => vf.maxdr_in_up(self.fixed),
            (MaxDR, Budget) => vf.maxdr_in_budget(self.fixed),
            _ => unreachable!("checked by shape"),
        }
    }
}

/// Builds the slice described by `spec` exactly.
pub fn construct_slice(vf: &ValueFunctions, spec: &SliceSpec) -> Result<Slice, ParametricError> {
    let (orientation, monotonicity) = spec.shape()?;
    if !(spec.lo < spec.hi) || spec.lo < 0.0 || spec.fixed < 0.0 || spec.fixed.is_nan() {
        return Err(ParametricError::InvalidSpec(format!(
            "need 0 <= lo < hi and a nonnegative fixed value, got {spec:?}"
        )));
    }
    let family = spec.family(vf);
    construct_family_slice(&family, spec.lo, spec.hi, orientation, monotonicity)
}

/// Tangent-intersection construction of the value function of `family` on
/// `[lo, hi]`; both endpoints must be feasible.
pub fn construct_family_slice(
    family: &ParametricLp,
    lo: f64,
    hi: f64,
    orientation: Orientation,
    monotonicity: Monotonicity,
) -> Result<Slice, ParametricError> {
    let tol = *family.tolerances();
    let start = family.solves();
    if lo == hi {
        let v = family.value(lo)?.ok_or(ParametricError::EndpointInfeasible(lo))?;
        let function = PiecewiseLinearFn::new(vec![lo], vec![v], orientation, monotonicity, 0.0, 0.0)?;
        return Ok(Slice { function, solves: family.solves() - start, capped: 0 });
    }
    let (va, sa) = family.value_and_slope(lo, true)?.ok_or(ParametricError::EndpointInfeasible(lo))?;
    let (vb, sb) = family.value_and_slope(hi, false)?.ok_or(ParametricError::EndpointInfeasible(hi))?;
    let mut walk = Walk {
        family,
        points: vec![(lo, va)],
        capped: 0,
        min_width: 1e-9 * (hi - lo),
        val_scale: va.abs().max(vb.abs()),
        slope_scale: sa.abs().max(sb.abs()),
        tol,
    };
    walk.refine(Knot { x: lo, v: va, s: sa }, Knot { x: hi, v: vb, s: sb }, 0)?;

    let merge = 1e-7 * (hi - lo);
    let mut xs: Vec<f64> = Vec::with_capacity(walk.points.len());
    let mut ys: Vec<f64> = Vec::with_capacity(walk.points.len());
    for (x, y) in walk.points {
        match xs.last() {
            Some(&last) if x - last <= merge => {
                // Keep the domain endpoint exact.
                if x == hi {
                    *xs.last_mut().unwrap() = x;
                    *ys.last_mut().unwrap() = y;
                }
            }
            _ => {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    if xs.len() == 1 {
        xs.push(hi);
        ys.push(vb);
    }
    // Drop collinear interior points left by verification splits.
    let (xs, ys) = prune_collinear(xs, ys, tol.slope_tol(walk.slope_scale));
    let vt = tol.val_tol(walk.val_scale);
    let st = tol.slope_tol(walk.slope_scale).max(1e3 * vt / (hi - lo));
    let function = PiecewiseLinearFn::new(xs, ys, orientation, monotonicity, vt, st)?;
    Ok(Slice { function, solves: family.solves() - start, capped: walk.capped })
}

#[derive(Clone, Copy, Debug)]
struct Knot {
    x: f64,
    v: f64,
    /// One-sided slope pointing into the interval being refined.
    s: f64,
}

struct Walk<'a> {
    family: &'a ParametricLp,
    points: Vec<(f64, f64)>,
    capped: usize,
    min_width: f64,
    val_scale: f64,
    slope_scale: f64,
    tol: crate::tolerance::Tolerances,
}

impl Walk<'_> {
    fn val_tol(&self) -> f64 {
        self.tol.val_tol(self.val_scale)
    }

    fn value(&self, x: f64) -> Result<f64, ParametricError> {
        self.family.value(x)?.ok_or(ParametricError::InteriorInfeasible(x))
    }

    fn slopes(&self, x: f64) -> Result<(f64, f64, f64), ParametricError> {
        let (v, left) = self.family.value_and_slope(x, false)?.ok_or(ParametricError::InteriorInfeasible(x))?;
        let (_, right) = self.family.value_and_slope(x, true)?.ok_or(ParametricError::InteriorInfeasible(x))?;
        Ok((v, left, right))
    }

    /// Emits the breakpoints in `(a.x, b.x]`, in order.
    fn refine(&mut self, a: Knot, b: Knot, depth: usize) -> Result<(), ParametricError> {
        let width = b.x - a.x;
        if depth >= MAX_DEPTH || width <= self.min_width {
            log::warn!("slice refinement capped on [{}, {}] at depth {depth}", a.x, b.x);
            self.capped += 1;
            self.points.push((b.x, b.v));
            return Ok(());
        }
        let slope_gap = a.s - b.s;
        if slope_gap.abs() <= self.tol.slope_tol(self.slope_scale) {
            // Affine candidate: one interior check.
            let mid = a.x + 0.5 * width;
            let vm = self.value(mid)?;
            let on_line = |x: f64, v: f64| (a.v + a.s * (x - a.x) - v).abs() <= self.val_tol();
            if on_line(mid, vm) && on_line(b.x, b.v) {
                self.points.push((b.x, b.v));
                return Ok(());
            }
            return self.split(a, b, mid, depth);
        }
        let x = (b.v - a.v + a.s * a.x - b.s * b.x) / slope_gap;
        if !(x > a.x + self.min_width && x < b.x - self.min_width) {
            // Tangents meet at (or beyond) an end: either the whole interval
            // is one piece of the nearer tangent, or the duals are degenerate.
            let mid = a.x + 0.5 * width;
            return self.split(a, b, mid, depth);
        }
        let y = a.v + a.s * (x - a.x);
        let v = self.value(x)?;
        if (v - y).abs() <= self.val_tol() {
            self.points.push((x, v));
            self.points.push((b.x, b.v));
            return Ok(());
        }
        self.split(a, b, x, depth)
    }

    fn split(&mut self, a: Knot, b: Knot, x: f64, depth: usize) -> Result<(), ParametricError> {
        let (v, left, right) = self.slopes(x)?;
        self.refine(a, Knot { x, v, s: left }, depth + 1)?;
        self.refine(Knot { x, v, s: right }, b, depth + 1)
    }
}

fn prune_collinear(xs: Vec<f64>, ys: Vec<f64>, slope_tol: f64) -> (Vec<f64>, Vec<f64>) {
    if xs.len() < 3 {
        return (xs, ys);
    }
    let mut ox = vec![xs[0]];
    let mut oy = vec![ys[0]];
    for i in 1..xs.len() - 1 {
        let (px, py) = (*ox.last().unwrap(), *oy.last().unwrap());
        let s1 = (ys[i] - py) / (xs[i] - px);
        let s2 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        if (s1 - s2).abs() > slope_tol {
            ox.push(xs[i]);
            oy.push(ys[i]);
        }
    }
    ox.push(*xs.last().unwrap());
    oy.push(*ys.last().unwrap());
    (ox, oy)
}
