//! The two-parameter cost surface `MinC(f_u, f_d)`.
//!
//! [`build_surface`] tiles the part of the feasible region where ramping
//! requirements raise cost with triangles on which `MinC` is affine, so a
//! barycentric [`query`] reproduces the LP value exactly. [`contour`] traces
//! equally spaced cost levels for plotting.

mod build;
mod contour;
pub mod geometry;

pub use build::{build_surface, build_surface_with};
pub use contour::{contour, contour_with, ContourLine, ContourSet};

use serde::Serialize;
use thiserror::Error;

use crate::format::round9;
use crate::parametric::{FeasibleBounds, ParametricError, PiecewiseLinearFn};
use crate::tolerance::Tolerances;
use geometry::Point;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("the model is infeasible without ramping requirements")]
    BaseInfeasible,
    #[error("(f_u, f_d) = ({f_u}, {f_d}) is outside the feasible ramping region")]
    Infeasible { f_u: f64, f_d: f64 },
    #[error("ramping parameters must be nonnegative, got ({f_u}, {f_d})")]
    NegativeParameter { f_u: f64, f_d: f64 },
    #[error("contour needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("triangulation failed: {0}")]
    TriangulationFailure(String),
    #[error(transparent)]
    Parametric(#[from] ParametricError),
}

impl From<crate::lp::LpError> for SurfaceError {
    fn from(e: crate::lp::LpError) -> Self {
        SurfaceError::Parametric(e.into())
    }
}

/// Affine lower bound `constant + grad_up·f_u + grad_down·f_d` of MinC that
/// is tight on a facet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub constant: f64,
    pub grad_up: f64,
    pub grad_down: f64,
}

impl Piece {
    pub fn eval(&self, f_u: f64, f_d: f64) -> f64 {
        self.constant + self.grad_up * f_u + self.grad_down * f_d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceVertex {
    pub f_u: f64,
    pub f_d: f64,
    pub cost: f64,
}

/// Boundary of `{MinC <= level}` facing away from the origin.
#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub level: f64,
    /// Largest `f_d` with `MinC(0, f_d) <= level`.
    pub fd_axis: f64,
    /// `(f_u, f_d)` from `(0, fd_axis)` to the `f_u` axis.
    pub chain: Vec<Point>,
    /// `f_d ↦ MaxUR(level, f_d)` on `[0, fd_axis]`.
    #[serde(skip)]
    pub slice: PiecewiseLinearFn,
}

impl Section {
    /// Whether `p` lies in `{MinC <= level}`, with slack `eps`.
    pub fn contains(&self, p: Point, eps: f64) -> bool {
        if p.1 > self.fd_axis + eps {
            return false;
        }
        let cap = self.slice.eval(p.1.clamp(0.0, self.fd_axis)).unwrap_or(0.0);
        p.0 <= cap + eps
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SurfaceStats {
    pub solves: usize,
    pub probes: usize,
    pub pieces: usize,
    pub rounds: usize,
}

#[derive(Clone, Debug)]
pub struct CostSurface {
    pub vertices: Vec<SurfaceVertex>,
    pub triangles: Vec<[usize; 3]>,
    /// Index `i` of the level band `[levels[i], levels[i+1]]` holding each triangle.
    pub triangle_band: Vec<usize>,
    pub bounds: FeasibleBounds,
    pub base_cost: f64,
    pub theta_max: f64,
    pub levels: Vec<f64>,
    pub sections: Vec<Section>,
    pub pieces: Vec<Piece>,
    pub stats: SurfaceStats,
    tol: Tolerances,
    /// Triangles per band, ordered by their smallest `f_u`.
    strips: Vec<Vec<usize>>,
}

/// Result of a surface lookup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueryResult {
    pub cost: f64,
    /// Set when the point needs no ramping distortion (cost is the base cost).
    pub non_interesting: bool,
}

#[derive(Serialize)]
struct SurfaceExport<'a> {
    base_cost: f64,
    theta_max: f64,
    argmax: [f64; 2],
    free_up: f64,
    free_down: f64,
    max_up: f64,
    max_down: f64,
    levels: Vec<f64>,
    vertices: Vec<SurfaceVertex>,
    triangles: &'a [[usize; 3]],
}

impl CostSurface {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        vertices: Vec<SurfaceVertex>,
        triangles: Vec<[usize; 3]>,
        triangle_band: Vec<usize>,
        bounds: FeasibleBounds,
        levels: Vec<f64>,
        sections: Vec<Section>,
        pieces: Vec<Piece>,
        stats: SurfaceStats,
        tol: Tolerances,
    ) -> CostSurface {
        let bands = levels.len().saturating_sub(1);
        let mut strips = vec![Vec::new(); bands];
        for (t, &b) in triangle_band.iter().enumerate() {
            strips[b].push(t);
        }
        let min_fu = |t: usize| triangles[t].iter().map(|&v| vertices[v].f_u).fold(f64::INFINITY, f64::min);
        for s in &mut strips {
            s.sort_by(|&a, &b| min_fu(a).total_cmp(&min_fu(b)));
        }
        CostSurface {
            base_cost: bounds.base_cost,
            theta_max: bounds.theta_max,
            vertices,
            triangles,
            triangle_band,
            bounds,
            levels,
            sections,
            pieces,
            stats,
            tol,
            strips,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    fn scale(&self) -> f64 {
        self.bounds.up_max.hi().max(self.bounds.down_max.hi()).max(1.0)
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| (self.vertices[v].f_u, self.vertices[v].f_d))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * geometry::cross(a, b, c)
    }

    fn interpolate(&self, t: usize, p: Point, eps: f64) -> Option<f64> {
        let [a, b, c] = self.triangle_points(t);
        let (l1, l2, l3) = geometry::barycentric(p, a, b, c)?;
        if l1 < -eps || l2 < -eps || l3 < -eps {
            return None;
        }
        let v = self.triangles[t].map(|i| self.vertices[i].cost);
        Some(l1 * v[0] + l2 * v[1] + l3 * v[2])
    }

    /// Lowest section containing `p`, by binary search over the nested
    /// sublevel sets.
    fn band_of(&self, p: Point, eps: f64) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.sections.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.sections[mid].contains(p, eps) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (lo < self.sections.len()).then_some(lo)
    }

    pub fn query(&self, f_u: f64, f_d: f64) -> Result<QueryResult, SurfaceError> {
        if f_u < 0.0 || f_d < 0.0 || f_u.is_nan() || f_d.is_nan() {
            return Err(SurfaceError::NegativeParameter { f_u, f_d });
        }
        let eps = 1e-9 * self.scale();
        if !self.bounds.contains(f_u, f_d, eps) {
            return Err(SurfaceError::Infeasible { f_u, f_d });
        }
        let p = (f_u, f_d);
        let free = QueryResult { cost: self.base_cost, non_interesting: true };
        if self.is_empty() {
            return Ok(free);
        }
        let section = self.band_of(p, eps);
        if section == Some(0) {
            return Ok(free);
        }
        let bary_eps = 1e-9;
        let guess = section.map(|s| s - 1).unwrap_or(self.strips.len() - 1);
        let neighbours = [Some(guess), guess.checked_sub(1), (guess + 1 < self.strips.len()).then_some(guess + 1)];
        for band in neighbours.into_iter().flatten() {
            for &t in &self.strips[band] {
                if let Some(cost) = self.interpolate(t, p, bary_eps) {
                    return Ok(QueryResult { cost, non_interesting: false });
                }
            }
        }
        // Rounding at a strip edge: nearest triangle over the whole surface.
        let mut best: Option<(f64, f64)> = None;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            if let Some((l1, l2, l3)) = geometry::barycentric(p, a, b, c) {
                let worst = l1.min(l2).min(l3);
                if best.is_none_or(|(w, _)| worst > w) {
                    let v = self.triangles[t].map(|i| self.vertices[i].cost);
                    best = Some((worst, l1 * v[0] + l2 * v[1] + l3 * v[2]));
                }
            }
        }
        match best {
            Some((w, cost)) if w > -1e-6 => Ok(QueryResult { cost, non_interesting: false }),
            _ => Ok(free),
        }
    }

    /// Distortion cost `MinC(f_u, f_d) - MinC(0, 0)`.
    pub fn ds(&self, f_u: f64, f_d: f64) -> Result<f64, SurfaceError> {
        Ok(self.query(f_u, f_d)?.cost - self.base_cost)
    }

    /// Free ramping widths `(f_u, f_d)` along each axis.
    pub fn free_widths(&self) -> (f64, f64) {
        (self.bounds.down_min.hi(), self.bounds.up_min.hi())
    }

    pub fn to_json(&self) -> String {
        let r2 = |p: (f64, f64)| [round9(p.0), round9(p.1)];
        let (free_up, free_down) = self.free_widths();
        let export = SurfaceExport {
            base_cost: round9(self.base_cost),
            theta_max: round9(self.theta_max),
            argmax: r2(self.bounds.argmax),
            free_up: round9(free_up),
            free_down: round9(free_down),
            max_up: round9(self.bounds.down_max.hi()),
            max_down: round9(self.bounds.up_max.hi()),
            levels: self.levels.iter().map(|&l| round9(l)).collect(),
            vertices: self
                .vertices
                .iter()
                .map(|v| SurfaceVertex { f_u: round9(v.f_u), f_d: round9(v.f_d), cost: round9(v.cost) })
                .collect(),
            triangles: &self.triangles,
        };
        serde_json::to_string_pretty(&export).expect("surface serializes")
    }
}
