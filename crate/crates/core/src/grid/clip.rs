//! Planar polygon clipping used for cell/area overlaps.
//!
//! The clip window is always split into convex pieces (the ring itself when
//! it is convex, an ear-cut triangulation otherwise) and the other polygon is
//! clipped against each piece with Sutherland–Hodgman. Clipping an arbitrary
//! simple ring against a convex window may leave zero-width bridges in the
//! output ring, but its signed area is exact, which is all we need.

use geo::{Coord, LineString, Polygon, TriangulateEarcut};

pub(crate) fn ring_coords(ring: &LineString<f64>) -> Vec<Coord<f64>> {
    let mut pts: Vec<Coord<f64>> = ring.0.clone();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    pts
}

/// Shoelace area; positive for counter-clockwise rings.
pub(crate) fn signed_area(ring: &[Coord<f64>]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

fn cross(o: Coord<f64>, a: Coord<f64>, b: Coord<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

pub(crate) fn is_convex(ring: &[Coord<f64>]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0f64;
    for i in 0..n {
        let c = cross(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]);
        if c != 0.0 {
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
    }
    sign != 0.0
}

fn ccw(mut ring: Vec<Coord<f64>>) -> Vec<Coord<f64>> {
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    ring
}

/// Convex, counter-clockwise pieces whose union is the polygon (holes excluded).
pub(crate) fn convex_pieces(poly: &Polygon<f64>) -> Vec<Vec<Coord<f64>>> {
    let ext = ring_coords(poly.exterior());
    if poly.interiors().is_empty() && is_convex(&ext) {
        return vec![ccw(ext)];
    }
    poly.earcut_triangles()
        .into_iter()
        .map(|t| ccw(vec![t.v1(), t.v2(), t.v3()]))
        .filter(|t| signed_area(t) > 0.0)
        .collect()
}

fn intersect_lines(p: Coord<f64>, q: Coord<f64>, a: Coord<f64>, b: Coord<f64>) -> Coord<f64> {
    // intersection of segment p->q with the infinite line a->b
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let t = dp / (dp - dq);
    Coord {
        x: p.x + t * (q.x - p.x),
        y: p.y + t * (q.y - p.y),
    }
}

/// Sutherland–Hodgman: clip `subject` (any simple ring) by a convex CCW window.
pub(crate) fn clip_by_convex(subject: &[Coord<f64>], window: &[Coord<f64>]) -> Vec<Coord<f64>> {
    let mut output = subject.to_vec();
    let m = window.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = window[i];
        let b = window[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(intersect_lines(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(intersect_lines(prev, cur, a, b));
            }
        }
    }
    output
}

fn ring_piece_overlap(ring: &[Coord<f64>], piece: &[Coord<f64>]) -> f64 {
    signed_area(&clip_by_convex(ring, piece)).abs()
}

/// Area (in squared input units) of the intersection of two valid polygons.
/// Uses precomputed convex pieces of the window polygon.
pub(crate) fn intersection_area_with_pieces(
    window_pieces: &[Vec<Coord<f64>>],
    subject: &Polygon<f64>,
) -> f64 {
    let ext = ring_coords(subject.exterior());
    let holes: Vec<Vec<Coord<f64>>> = subject.interiors().iter().map(ring_coords).collect();
    let mut total = 0.0;
    for piece in window_pieces {
        total += ring_piece_overlap(&ext, piece);
        for h in &holes {
            total -= ring_piece_overlap(h, piece);
        }
    }
    total.max(0.0)
}

#[cfg(test)]
pub(crate) fn intersection_area(a: &Polygon<f64>, b: &Polygon<f64>) -> f64 {
    intersection_area_with_pieces(&convex_pieces(a), b)
}

fn segments_cross(p1: Coord<f64>, p2: Coord<f64>, q1: Coord<f64>, q2: Coord<f64>) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Coord<f64>, b: Coord<f64>, c: Coord<f64>, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Reason a ring fails simplicity, if any.
pub(crate) fn ring_defect(ring: &[Coord<f64>]) -> Option<String> {
    let n = ring.len();
    if n < 3 {
        return Some(format!("ring has {n} distinct vertices, need at least 3"));
    }
    if ring.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
        return Some("non-finite coordinate".into());
    }
    if signed_area(ring) == 0.0 {
        return Some("zero-area ring".into());
    }
    for i in 0..n {
        if ring[i] == ring[(i + 1) % n] {
            return Some(format!("repeated vertex at position {i}"));
        }
    }
    for i in 0..n {
        let (a1, a2) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            // skip edges sharing a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (ring[j], ring[(j + 1) % n]);
            if segments_cross(a1, a2, b1, b2) {
                return Some(format!("edges {i} and {j} intersect"));
            }
        }
    }
    None
}

/// Length of boundary shared by two polygons' exteriors (collinear overlapping edges).
pub(crate) fn shared_boundary_length(a: &Polygon<f64>, b: &Polygon<f64>, tol: f64) -> f64 {
    let ra = ring_coords(a.exterior());
    let rb = ring_coords(b.exterior());
    let mut total = 0.0;
    for i in 0..ra.len() {
        let (p, q) = (ra[i], ra[(i + 1) % ra.len()]);
        let len = ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((q.x - p.x) / len, (q.y - p.y) / len);
        for j in 0..rb.len() {
            let (r, s) = (rb[j], rb[(j + 1) % rb.len()]);
            // perpendicular distances of r and s to line p->q
            let dr = (r.x - p.x) * uy - (r.y - p.y) * ux;
            let ds = (s.x - p.x) * uy - (s.y - p.y) * ux;
            if dr.abs() > tol || ds.abs() > tol {
                continue;
            }
            let tr = (r.x - p.x) * ux + (r.y - p.y) * uy;
            let ts = (s.x - p.x) * ux + (s.y - p.y) * uy;
            let lo = tr.min(ts).max(0.0);
            let hi = tr.max(ts).min(len);
            if hi - lo > tol {
                total += hi - lo;
            }
        }
    }
    total
}
