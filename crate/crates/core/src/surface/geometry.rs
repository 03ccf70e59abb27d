//! Small planar geometry kit for convex polygons in the (f_u, f_d) plane.

pub type Point = (f64, f64);

pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Signed area; positive for counter-clockwise rings.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum::<f64>()
        * 0.5
}

pub fn centroid(poly: &[Point]) -> Point {
    let a = signed_area(poly);
    if a.abs() < 1e-300 {
        let n = poly.len() as f64;
        return (poly.iter().map(|p| p.0).sum::<f64>() / n, poly.iter().map(|p| p.1).sum::<f64>() / n);
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.0 * q.1 - q.0 * p.1;
        cx += (p.0 + q.0) * w;
        cy += (p.1 + q.1) * w;
    }
    (cx / (6.0 * a), cy / (6.0 * a))
}

/// Half-plane `a·x + b·y + c >= 0`.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    fn eval(&self, p: Point) -> f64 {
        self.a * p.0 + self.b * p.1 + self.c
    }
}

/// Clips a convex polygon by a half-plane, treating signed distances above
/// `-eps` as inside.
pub fn clip(poly: &[Point], h: HalfPlane, eps: f64) -> Vec<Point> {
    let norm = h.a.hypot(h.b);
    if norm < 1e-300 {
        return if h.c >= -eps { poly.to_vec() } else { Vec::new() };
    }
    let dist = |p: Point| h.eval(p) / norm;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (dp, dq) = (dist(p), dist(q));
        let (pin, qin) = (dp >= -eps, dq >= -eps);
        if pin {
            out.push(p);
        }
        if pin != qin && (dp.abs() > eps || dq.abs() > eps) {
            let t = dp / (dp - dq);
            if t > 0.0 && t < 1.0 {
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
    }
    dedup(out, eps)
}

/// Drops consecutive near-duplicates, including across the wrap.
pub fn dedup(pts: Vec<Point>, eps: f64) -> Vec<Point> {
    let close = |p: Point, q: Point| (p.0 - q.0).abs() <= eps && (p.1 - q.1).abs() <= eps;
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|&q| !close(p, q)) {
            out.push(p);
        }
    }
    while out.len() > 1 && close(out[0], *out.last().unwrap()) {
        out.pop();
    }
    out
}

/// Removes vertices lying on the segment joining their neighbours.
pub fn drop_collinear(poly: Vec<Point>, eps: f64) -> Vec<Point> {
    let mut ring = poly;
    loop {
        let n = ring.len();
        if n < 3 {
            return ring;
        }
        let hit = (0..n).find(|&i| {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let len = (c.0 - a.0).hypot(c.1 - a.1).max(1e-300);
            cross(a, b, c).abs() / len <= eps
        });
        match hit {
            Some(i) => {
                ring.remove(i);
            }
            None => return ring,
        }
    }
}

/// Distance from `p` to segment `ab`, and the projection parameter.
pub fn segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((p.0 - a.0).hypot(p.1 - a.1), 0.0);
    }
    let t = ((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2;
    let tc = t.clamp(0.0, 1.0);
    let q = (a.0 + tc * dx, a.1 + tc * dy);
    ((p.0 - q.0).hypot(p.1 - q.1), t)
}

/// Barycentric coordinates of `p` in triangle `abc`.
pub fn barycentric(p: Point, a: Point, b: Point, c: Point) -> Option<(f64, f64, f64)> {
    let det = cross(a, b, c);
    if det.abs() < 1e-300 {
        return None;
    }
    let l1 = cross(p, b, c) / det;
    let l2 = cross(a, p, c) / det;
    Some((l1, l2, 1.0 - l1 - l2))
}

/// Ear-clipping triangulation of a counter-clockwise polygon that may carry
/// collinear vertices. Ears must have area above `area_tol` and contain no
/// other vertex, boundary included. Returns index triples into `poly`.
pub fn ear_clip(poly: &[Point], area_tol: f64, eps: f64) -> Option<Vec<[usize; 3]>> {
    let mut ring: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while ring.len() > 3 {
        let n = ring.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            let (ia, ib, ic) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            let area = 0.5 * cross(a, b, c);
            if area <= area_tol {
                continue;
            }
            let blocked = ring.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = poly[j];
                let inside = |o: Point, q: Point| {
                    let len = (q.0 - o.0).hypot(q.1 - o.1).max(1e-300);
                    cross(o, q, p) / len >= -eps
                };
                inside(a, b) && inside(b, c) && inside(c, a)
            });
            if blocked {
                continue;
            }
            let quality = min_angle(a, b, c);
            if best.is_none_or(|(_, q)| quality > q + 1e-12) {
                best = Some((k, quality));
            }
        }
        let (k, _) = best?;
        let n = ring.len();
        out.push([ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]]);
        ring.remove(k);
    }
    if ring.len() == 3 {
        let (a, b, c) = (poly[ring[0]], poly[ring[1]], poly[ring[2]]);
        if 0.5 * cross(a, b, c) <= area_tol {
            return None;
        }
        out.push([ring[0], ring[1], ring[2]]);
    }
    Some(out)
}

fn min_angle(a: Point, b: Point, c: Point) -> f64 {
    let ang = |p: Point, q: Point, r: Point| {
        let (u, v) = ((q.0 - p.0, q.1 - p.1), (r.0 - p.0, r.1 - p.1));
        (u.0 * v.1 - u.1 * v.0).abs().atan2(u.0 * v.0 + u.1 * v.1)
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}
