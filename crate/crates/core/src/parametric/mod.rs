//! Exact one-dimensional slices of the parametric value functions and the
//! boundaries of the feasible ramping region.
//!
//! `MinC(f_u, f_d)` is the least dispatch cost meeting up/down ramping awards
//! `f_u`, `f_d`. `MaxUR(θ, f_d)` is the largest up award reachable at cost at
//! most `θ` with down award `f_d`; `MaxDR(θ, f_u)` is its mirror. Every slice
//! is convex or concave and piecewise linear, so it is recovered exactly by
//! intersecting one-sided tangents obtained from LP duals.

mod bounds;
mod family;
mod pwl;
mod slice;

pub use bounds::{feasible_bounds, FeasibleBounds};
pub use family::{ParametricLp, ValueFunctions};
pub use pwl::{Monotonicity, Orientation, PiecewiseLinearFn};
pub use slice::{construct_family_slice, construct_slice, Argument, Slice, SliceSpec, ValueFunction};

use thiserror::Error;

use crate::grid::GridError;
use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum ParametricError {
    #[error("the model is infeasible without ramping requirements")]
    BaseInfeasible,
    #[error("slice endpoint {0} is infeasible")]
    EndpointInfeasible(f64),
    #[error("slice is infeasible at interior point {0}")]
    InteriorInfeasible(f64),
    #[error("value function is unbounded at {0}")]
    Unbounded(f64),
    #[error("negative parameter {0}")]
    NegativeParameter(f64),
    #[error("invalid slice: {0}")]
    InvalidSpec(String),
    #[error("invalid piecewise-linear function: {0}")]
    InvalidFunction(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Lp(#[from] LpError),
}
