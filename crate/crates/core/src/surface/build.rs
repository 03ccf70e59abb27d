use std::collections::BTreeMap;

use super::geometry::{self, HalfPlane, Point};
use super::{CostSurface, Piece, Section, SurfaceError, SurfaceStats, SurfaceVertex};
use crate::grid::GridModel;
use crate::parametric::{
    construct_family_slice, feasible_bounds, FeasibleBounds, Monotonicity, Orientation, ParametricError,
    ValueFunctions,
};
use crate::tolerance::Tolerances;

/// Refinement rounds before giving up on an inexact tiling.
const MAX_ROUNDS: usize = 100;

pub fn build_surface(model: &GridModel) -> Result<CostSurface, SurfaceError> {
    build_surface_with(model, Tolerances::default())
}

pub fn build_surface_with(model: &GridModel, tol: Tolerances) -> Result<CostSurface, SurfaceError> {
    let vf = ValueFunctions::new(model, tol)?;
    let bounds = feasible_bounds(&vf).map_err(|e| match e {
        ParametricError::BaseInfeasible => SurfaceError::BaseInfeasible,
        other => other.into(),
    })?;
    Builder::new(vf, bounds).run()
}

struct Builder {
    vf: ValueFunctions,
    bounds: FeasibleBounds,
    region: Vec<Point>,
    /// Length scale of the parameter plane, MW.
    scale: f64,
    pieces: Vec<Piece>,
    stats: SurfaceStats,
}

struct Cell {
    band: usize,
    poly: Vec<Point>,
}

impl Builder {
    fn new(vf: ValueFunctions, bounds: FeasibleBounds) -> Self {
        let region = bounds.region_vertices();
        let scale = bounds.up_max.hi().max(bounds.down_max.hi()).max(1.0);
        Builder { vf, bounds, region, scale, pieces: Vec::new(), stats: SurfaceStats::default() }
    }

    fn tol(&self) -> &Tolerances {
        self.vf.tolerances()
    }

    fn eps(&self) -> f64 {
        1e-7 * self.scale
    }

    fn area_tol(&self) -> f64 {
        1e-10 * self.scale * self.scale
    }

    fn val_tol(&self) -> f64 {
        self.tol().val_tol(self.bounds.theta_max)
    }

    fn run(mut self) -> Result<CostSurface, SurfaceError> {
        let base = self.bounds.base_cost;
        let top = self.bounds.theta_max;
        let empty_region = self.region.len() < 3 || geometry::signed_area(&self.region) <= self.area_tol();
        if empty_region || top - base <= self.val_tol() {
            log::warn!("ramping region has no interesting part; surface is empty");
            let sections = vec![self.section(base)?];
            return Ok(self.finish(vec![base], sections, Vec::new(), Vec::new(), Vec::new()));
        }

        let levels = self.levels()?;
        let sections = levels.iter().map(|&l| self.section(l)).collect::<Result<Vec<_>, _>>()?;
        self.seed(&sections)?;

        for round in 0..MAX_ROUNDS {
            self.stats.rounds = round + 1;
            let cells = self.cells(&levels);
            let (points, polys) = self.conform(&cells);
            let mut triangles = Vec::new();
            let mut bands = Vec::new();
            for (cell, poly) in cells.iter().zip(&polys) {
                let coords: Vec<Point> = poly.iter().map(|&i| points[i]).collect();
                let tris = geometry::ear_clip(&coords, self.area_tol(), 1e-3 * self.eps()).ok_or_else(|| {
                    SurfaceError::TriangulationFailure(format!("cannot triangulate cell {:?}", cell.poly))
                })?;
                for t in tris {
                    triangles.push([poly[t[0]], poly[t[1]], poly[t[2]]]);
                    bands.push(cell.band);
                }
            }
            let costs = points.iter().map(|&p| self.cost_at(p)).collect::<Result<Vec<_>, _>>()?;

            let mut missing: Vec<Point> = Vec::new();
            for (&p, &c) in points.iter().zip(&costs) {
                let (model, _) = self.max_piece(p);
                if c > model + self.val_tol() {
                    missing.push(p);
                }
            }
            for t in &triangles {
                let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
                let g = ((a.0 + b.0 + c.0) / 3.0, (a.1 + b.1 + c.1) / 3.0);
                let interp = (costs[t[0]] + costs[t[1]] + costs[t[2]]) / 3.0;
                let actual = self.cost_at(g)?;
                if (actual - interp).abs() > self.val_tol() {
                    missing.push(g);
                }
            }
            if missing.is_empty() {
                let vertices = points
                    .iter()
                    .zip(&costs)
                    .map(|(&(f_u, f_d), &cost)| SurfaceVertex { f_u, f_d, cost })
                    .collect();
                return Ok(self.finish(levels, sections, vertices, triangles, bands));
            }
            let before = self.pieces.len();
            for p in missing {
                self.probe_point(p)?;
            }
            if self.pieces.len() == before {
                return Err(SurfaceError::TriangulationFailure(
                    "interpolation is inexact but no new cost piece was found".into(),
                ));
            }
        }
        Err(SurfaceError::TriangulationFailure(format!("no exact tiling after {MAX_ROUNDS} rounds")))
    }

    fn finish(
        self,
        levels: Vec<f64>,
        sections: Vec<Section>,
        vertices: Vec<SurfaceVertex>,
        triangles: Vec<[usize; 3]>,
        bands: Vec<usize>,
    ) -> CostSurface {
        let mut stats = self.stats;
        stats.pieces = self.pieces.len();
        CostSurface::assemble(
            vertices,
            triangles,
            bands,
            self.bounds,
            levels,
            sections,
            self.pieces,
            stats,
            *self.vf.tolerances(),
        )
    }

    /// Distinct costs at the breakpoints of both axis slices, plus the top.
    fn levels(&mut self) -> Result<Vec<f64>, SurfaceError> {
        let base = self.bounds.base_cost;
        let top = self.bounds.theta_max;
        let mut raw = vec![base];
        let slices = [
            (self.vf.minc_in_down(0.0), self.bounds.up_max.hi()),
            (self.vf.minc_in_up(0.0), self.bounds.down_max.hi()),
        ];
        for (family, hi) in &slices {
            if *hi > 0.0 {
                let s = construct_family_slice(family, 0.0, *hi, Orientation::Convex, Monotonicity::Nondecreasing)?;
                self.stats.solves += s.solves;
                raw.extend_from_slice(s.function.values());
            }
        }
        raw.push(top);
        raw.sort_by(f64::total_cmp);
        let mut levels: Vec<f64> = Vec::new();
        for v in raw {
            if v < base || v > top + self.val_tol() {
                continue;
            }
            match levels.last() {
                Some(&l) if (v - l).abs() <= 1e-9 * l.abs().max(1.0) => {}
                _ => levels.push(v),
            }
        }
        // The maximum may sit within tolerance of a slice value; keep it exact.
        if let Some(last) = levels.last_mut() {
            if (*last - top).abs() <= self.val_tol() {
                *last = top;
            }
        }
        Ok(levels)
    }

    /// Upper-right boundary of `{MinC <= level}`, from the f_d axis to the
    /// f_u axis.
    fn section(&mut self, level: f64) -> Result<Section, SurfaceError> {
        let fd_axis = self.vf.maxdr(level, 0.0)?.ok_or(SurfaceError::BaseInfeasible)?.max(0.0);
        let family = self.vf.maxur_in_down(level);
        let slice = construct_family_slice(&family, 0.0, fd_axis, Orientation::Concave, Monotonicity::Nonincreasing)?;
        self.stats.solves += slice.solves + 1;
        let mut chain = vec![(0.0, fd_axis)];
        for (fd, fu) in slice.function.points().collect::<Vec<_>>().into_iter().rev() {
            chain.push((fu.max(0.0), fd));
        }
        let chain = geometry::dedup(chain, 1e-12 * self.scale);
        Ok(Section { level, fd_axis, chain, slice: slice.function })
    }

    fn add_piece(&mut self, piece: Piece) -> bool {
        let same = |q: &Piece| {
            let gt = 1e-7 * piece.grad_up.abs().max(piece.grad_down.abs()).max(1.0);
            (q.grad_up - piece.grad_up).abs() <= gt
                && (q.grad_down - piece.grad_down).abs() <= gt
                && (q.constant - piece.constant).abs() <= self.val_tol()
        };
        if self.pieces.iter().any(same) {
            return false;
        }
        self.pieces.push(piece);
        true
    }

    fn probe(&mut self, p: Point, d1: Point, d2: Point) -> Result<(), SurfaceError> {
        self.stats.probes += 1;
        self.stats.solves += 1;
        if let Some((v, (gu, gd))) = self.vf.minc_piece(p.0.max(0.0), p.1.max(0.0), d1, d2)? {
            let constant = v - gu * p.0.max(0.0) - gd * p.1.max(0.0);
            self.add_piece(Piece { constant, grad_up: gu, grad_down: gd });
        }
        Ok(())
    }

    /// Pieces active on either side of every section and boundary segment.
    fn seed(&mut self, sections: &[Section]) -> Result<(), SurfaceError> {
        let mut segments: Vec<(Point, Point)> = Vec::new();
        for s in sections {
            segments.extend(s.chain.windows(2).map(|w| (w[0], w[1])));
        }
        let n = self.region.len();
        segments.extend((0..n).map(|i| (self.region[i], self.region[(i + 1) % n])));
        for (a, b) in segments {
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            if len <= self.eps() {
                continue;
            }
            let t = ((b.0 - a.0) / len, (b.1 - a.1) / len);
            let nrm = (-t.1, t.0);
            let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    self.probe(mid, (s1 * nrm.0, s1 * nrm.1), (s2 * t.0, s2 * t.1))?;
                }
            }
        }
        Ok(())
    }

    fn probe_point(&mut self, p: Point) -> Result<(), SurfaceError> {
        let c = geometry::centroid(&self.region);
        let inward = (c.0 - p.0, c.1 - p.1);
        let len = inward.0.hypot(inward.1);
        if len > self.eps() {
            let d = (inward.0 / len, inward.1 / len);
            self.probe(p, d, (-d.1, d.0))?;
            self.probe(p, d, (d.1, -d.0))?;
        }
        self.probe(p, (1.0, 0.0), (0.0, 1.0))?;
        self.probe(p, (-1.0, 0.0), (0.0, -1.0))
    }

    fn max_piece(&self, p: Point) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (k, q) in self.pieces.iter().enumerate() {
            let v = q.eval(p.0, p.1);
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }

    fn is_free(&self, q: &Piece) -> bool {
        q.grad_up.abs() <= self.tol().slope_tol(1.0)
            && q.grad_down.abs() <= self.tol().slope_tol(1.0)
            && (q.constant - self.bounds.base_cost).abs() <= self.val_tol()
    }

    /// Facet of each cost-raising piece, split by the section levels.
    fn cells(&self, levels: &[f64]) -> Vec<Cell> {
        let clip_eps = 1e-9 * self.scale;
        let mut out = Vec::new();
        for (k, q) in self.pieces.iter().enumerate() {
            if self.is_free(q) {
                continue;
            }
            let mut poly = self.region.clone();
            for (j, r) in self.pieces.iter().enumerate() {
                if j == k || poly.len() < 3 {
                    continue;
                }
                let h = HalfPlane {
                    a: q.grad_up - r.grad_up,
                    b: q.grad_down - r.grad_down,
                    c: q.constant - r.constant,
                };
                poly = geometry::clip(&poly, h, clip_eps);
            }
            if poly.len() < 3 || geometry::signed_area(&poly) <= self.area_tol() {
                continue;
            }
            for band in 0..levels.len().saturating_sub(1) {
                let lo = HalfPlane { a: q.grad_up, b: q.grad_down, c: q.constant - levels[band] };
                let hi = HalfPlane { a: -q.grad_up, b: -q.grad_down, c: levels[band + 1] - q.constant };
                let cell = geometry::clip(&geometry::clip(&poly, lo, clip_eps), hi, clip_eps);
                if cell.len() >= 3 && geometry::signed_area(&cell) > self.area_tol() {
                    out.push(Cell { band, poly: cell });
                }
            }
        }
        out
    }

    /// Shared vertex list and, per cell, its boundary as indices with every
    /// vertex lying on an edge inserted, so neighbouring cells conform.
    fn conform(&self, cells: &[Cell]) -> (Vec<Point>, Vec<Vec<usize>>) {
        let eps = self.eps();
        let mut points: Vec<Point> = Vec::new();
        // Grid buckets keep the merge near-linear.
        let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        let key = |p: Point| ((p.0 / (4.0 * eps)).floor() as i64, (p.1 / (4.0 * eps)).floor() as i64);
        let mut index_of = |p: Point, points: &mut Vec<Point>| -> usize {
            let (kx, ky) = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = buckets.get(&(kx + dx, ky + dy)) {
                        for &i in ids {
                            let q = points[i];
                            if (q.0 - p.0).abs() <= eps && (q.1 - p.1).abs() <= eps {
                                return i;
                            }
                        }
                    }
                }
            }
            points.push(p);
            buckets.entry((kx, ky)).or_default().push(points.len() - 1);
            points.len() - 1
        };
        let mut rings: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        for cell in cells {
            let poly = geometry::drop_collinear(cell.poly.clone(), 1e-3 * eps);
            let mut ring: Vec<usize> = Vec::new();
            for p in poly {
                let i = index_of(p, &mut points);
                if ring.last() != Some(&i) {
                    ring.push(i);
                }
            }
            while ring.len() > 1 && ring[0] == *ring.last().unwrap() {
                ring.pop();
            }
            rings.push(ring);
        }
        let snapped = points.clone();
        let polys = rings
            .into_iter()
            .map(|ring| {
                let n = ring.len();
                let mut out = Vec::new();
                for e in 0..n {
                    let (i, j) = (ring[e], ring[(e + 1) % n]);
                    out.push(i);
                    let (a, b) = (snapped[i], snapped[j]);
                    let mut on_edge: Vec<(f64, usize)> = (0..snapped.len())
                        .filter(|&v| v != i && v != j)
                        .filter_map(|v| {
                            let (d, t) = geometry::segment_distance(snapped[v], a, b);
                            (d <= eps && t > 0.0 && t < 1.0).then_some((t, v))
                        })
                        .collect();
                    on_edge.sort_by(|x, y| x.0.total_cmp(&y.0));
                    out.extend(on_edge.into_iter().map(|(_, v)| v));
                }
                out
            })
            .collect();
        (snapped, polys)
    }

    /// MinC at `p`, pulled a hair into the region when rounding puts a
    /// boundary point outside it.
    fn cost_at(&mut self, p: Point) -> Result<f64, SurfaceError> {
        self.stats.solves += 1;
        if let Some(v) = self.vf.minc(p.0.max(0.0), p.1.max(0.0))? {
            return Ok(v);
        }
        let c = geometry::centroid(&self.region);
        for step in [1e-9, 1e-7] {
            self.stats.solves += 1;
            let q = (p.0 + step * (c.0 - p.0), p.1 + step * (c.1 - p.1));
            if let Some(v) = self.vf.minc(q.0.max(0.0), q.1.max(0.0))? {
                return Ok(v);
            }
        }
        Err(SurfaceError::Infeasible { f_u: p.0, f_d: p.1 })
    }
}
