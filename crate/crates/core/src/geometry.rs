//! Polygon math in image coordinates.
//!
//! All coordinates are y-down pixel coordinates. Under that convention a
//! polygon is clockwise on screen exactly when its shoelace sum
//! `Σ (x_i·y_{i+1} − x_{i+1}·y_i)` is positive, and every function here uses
//! that sign as the reference orientation.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster;

/// Vertices whose |sin| between the incident edges falls below this are
/// rejected instead of producing an unbounded miter.
pub const ANGLE_TOLERANCE: f64 = 1e-6;

/// Relative length below which an offset edge counts as collapsed.
const COLLAPSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closed polygon given by its ordered vertices; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Builds a polygon, rejecting non-finite coordinates.
    ///
    /// Vertex count is not checked here: contours of thin components are
    /// legitimately degenerate. Area and offset operations check it.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { vertices })
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point::from).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Shoelace area without the vertex-count check.
    pub(crate) fn raw_signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.raw_signed_area().abs()
    }

    /// Axis-aligned bounds as `(min, max)`; `None` for an empty polygon.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        let sum = self
            .vertices
            .iter()
            .fold(Point::default(), |acc, &p| acc + p);
        sum * (1.0 / n)
    }

    /// Even-odd point containment; points on an edge count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        if self.distance_to_boundary(p) <= 1e-12 {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y <= p.y) != (b.y <= p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the nearest point on any edge.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when no two non-adjacent edges touch and no adjacent edges fold
    /// back onto each other.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let v = &self.vertices;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if a == b {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (v[j], v[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges share one vertex; they may only overlap
                    // if they are collinear and fold back.
                    let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    let u = p - shared;
                    let w = q - shared;
                    if u.cross(w).abs() <= 1e-12 * u.norm() * w.norm() && u.dot(w) > 0.0 {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// Expansion parameters: a shrink ratio and the pixel distance it maps to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetSpec {
    pub ratio: f64,
    pub distance: f64,
}

impl OffsetSpec {
    pub fn from_ratio(poly: &Polygon, ratio: f64) -> Result<Self> {
        Ok(Self {
            ratio,
            distance: offset_distance_for_ratio(poly, ratio)?,
        })
    }
}

fn require_vertices(poly: &Polygon) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::DegeneratePolygon(format!(
            "{} vertices, need at least 3",
            poly.len()
        )));
    }
    Ok(())
}

/// Half the shoelace sum; positive means clockwise on screen.
pub fn signed_area(poly: &Polygon) -> Result<f64> {
    require_vertices(poly)?;
    Ok(poly.raw_signed_area())
}

/// Returns the polygon with positive signed area.
///
/// A counterclockwise input is reversed while keeping vertex 0 first:
/// `[v0, v_{n-1}, …, v1]`.
pub fn ensure_clockwise(poly: &Polygon) -> Result<Polygon> {
    let area = signed_area(poly)?;
    if area == 0.0 {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    if area > 0.0 {
        Ok(poly.clone())
    } else {
        Ok(Polygon {
            vertices: reorient(&poly.vertices),
        })
    }
}

/// `[v0, v_{n-1}, …, v1]`. Applying it twice is the identity.
fn reorient(v: &[Point]) -> Vec<Point> {
    let n = v.len();
    (0..n).map(|i| v[(n - i) % n]).collect()
}

fn reoriented_index(i: usize, n: usize) -> usize {
    (n - i) % n
}

/// Miter offset of a clockwise vertex list. Positive `distance` moves
/// every edge outward.
fn miter_offset(v: &[Point], distance: f64) -> std::result::Result<Vec<Point>, (usize, f64)> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p = v[i];
        let v1 = p - v[(i + n - 1) % n];
        let v2 = p - v[(i + 1) % n];
        let (l1, l2) = (v1.norm(), v2.norm());
        if l1 == 0.0 || l2 == 0.0 {
            return Err((i, 0.0));
        }
        // Signed so that convex corners of a clockwise polygon are positive;
        // reflex corners flip the bisector back outward.
        let sine = -v1.cross(v2) / (l1 * l2);
        if sine.abs() < ANGLE_TOLERANCE {
            return Err((i, sine));
        }
        let bisector = v1 * (1.0 / l1) + v2 * (1.0 / l2);
        out.push(p + bisector * (distance / sine));
    }
    Ok(out)
}

/// Polygon expansion: every edge moves outward by `distance`, vertices
/// slide along their corner bisectors.
///
/// The output keeps the input's orientation and vertex indexing, so
/// `q_i` is the image of `p_i`.
pub fn expand_polygon(poly: &Polygon, distance: f64) -> Result<Polygon> {
    require_vertices(poly)?;
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "expansion distance must be finite and >= 0, got {distance}"
        )));
    }
    if distance == 0.0 {
        return Ok(poly.clone());
    }
    offset_signed(poly, distance)
}

fn offset_signed(poly: &Polygon, distance: f64) -> Result<Polygon> {
    let area = poly.raw_signed_area();
    if area == 0.0 {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    let n = poly.len();
    let flipped = area < 0.0;
    let work = if flipped {
        reorient(&poly.vertices)
    } else {
        poly.vertices.clone()
    };
    let out = miter_offset(&work, distance).map_err(|(i, sine)| Error::DegenerateAngle {
        index: if flipped { reoriented_index(i, n) } else { i },
        sine,
    })?;
    let vertices = if flipped { reorient(&out) } else { out };
    Ok(Polygon { vertices })
}

/// Inward offset by `distance` using the same miter rule as
/// [`expand_polygon`].
///
/// Edges whose offset copy reverses direction are removed one at a time
/// (most reversed first) and the neighbouring offset lines re-intersected.
/// Returns `Ok(None)` when fewer than three edges survive, when the result
/// is not a simple positively oriented polygon, or when opposite offset
/// lines meet head on.
pub fn shrink_polygon(poly: &Polygon, distance: f64) -> Result<Option<Polygon>> {
    require_vertices(poly)?;
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shrink distance must be finite and >= 0, got {distance}"
        )));
    }
    if distance == 0.0 {
        return Ok(Some(poly.clone()));
    }
    let area = poly.raw_signed_area();
    if area == 0.0 {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    let flipped = area < 0.0;
    let work = if flipped {
        reorient(&poly.vertices)
    } else {
        poly.vertices.clone()
    };
    let Some(shrunk) = inward_offset(&work, distance) else {
        return Ok(None);
    };
    let result = Polygon {
        vertices: if flipped {
            reorient(&shrunk)
        } else {
            shrunk
        },
    };
    Ok(Some(result))
}

struct OffsetLine {
    origin: Point,
    dir: Point,
}

fn intersect(a: &OffsetLine, b: &OffsetLine) -> Option<Point> {
    let denom = a.dir.cross(b.dir);
    let scale = a.dir.norm() * b.dir.norm();
    if denom.abs() <= ANGLE_TOLERANCE * scale {
        return None;
    }
    let t = (b.origin - a.origin).cross(b.dir) / denom;
    Some(a.origin + a.dir * t)
}

fn inward_offset(v: &[Point], distance: f64) -> Option<Vec<Point>> {
    let n = v.len();
    let mut lines: Vec<OffsetLine> = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let dir = b - a;
        let len = dir.norm();
        if len == 0.0 {
            continue;
        }
        // Outward normal of a clockwise-on-screen polygon.
        let outward = Point::new(dir.y, -dir.x) * (1.0 / len);
        let line = OffsetLine {
            origin: a - outward * distance,
            dir,
        };
        // Merge consecutive collinear edges; they share one offset line.
        if let Some(prev) = lines.last() {
            if prev.dir.cross(dir).abs() <= ANGLE_TOLERANCE * prev.dir.norm() * len
                && prev.dir.dot(dir) > 0.0
            {
                continue;
            }
        }
        lines.push(line);
    }
    if lines.len() >= 2 {
        let (first, last) = (&lines[0], &lines[lines.len() - 1]);
        if first.dir.cross(last.dir).abs() <= ANGLE_TOLERANCE * first.dir.norm() * last.dir.norm()
            && first.dir.dot(last.dir) > 0.0
        {
            lines.pop();
        }
    }

    loop {
        let m = lines.len();
        if m < 3 {
            return None;
        }
        // Vertex k joins line k-1 and line k.
        let mut verts = Vec::with_capacity(m);
        for k in 0..m {
            verts.push(intersect(&lines[(k + m - 1) % m], &lines[k])?);
        }
        let mut worst: Option<(usize, f64)> = None;
        for k in 0..m {
            let dir = lines[k].dir;
            let len = dir.norm();
            let along = (verts[(k + 1) % m] - verts[k]).dot(dir) / len;
            if along <= COLLAPSE_TOLERANCE * len.max(1.0) && worst.is_none_or(|(_, w)| along < w) {
                worst = Some((k, along));
            }
        }
        match worst {
            Some((k, _)) => {
                lines.remove(k);
            }
            None => {
                let poly = Polygon { vertices: verts };
                if poly.raw_signed_area() <= 0.0 || !poly.is_simple() {
                    return None;
                }
                return Some(poly.vertices);
            }
        }
    }
}

/// Offset distance for a shrink ratio: `Area·(1 − r²) / Perimeter`.
pub fn offset_distance_for_ratio(poly: &Polygon, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "shrink ratio must lie in (0, 1], got {ratio}"
        )));
    }
    require_vertices(poly)?;
    let perimeter = poly.perimeter();
    if perimeter == 0.0 {
        return Err(Error::DegeneratePolygon("zero perimeter".into()));
    }
    Ok(poly.area() * (1.0 - ratio * ratio) / perimeter)
}

/// Convex hull with positive orientation, collinear points dropped
/// (Andrew's monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex
/// hull. Vertices come back clockwise on screen.
pub fn min_area_rect(points: &[Point]) -> Result<Polygon> {
    if points.len() < 3 {
        return Err(Error::DegeneratePolygon(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "point {i} has a non-finite coordinate"
        )));
    }
    let hull = convex_hull(points);
    let m = hull.len();
    if m < 3 {
        return Err(Error::DegeneratePolygon("points are collinear".into()));
    }

    let edge_unit = |i: usize| {
        let e = hull[(i + 1) % m] - hull[i];
        e * (1.0 / e.norm())
    };
    let height = |u: Point, base: Point, j: usize| u.cross(hull[j] - base);
    let along = |u: Point, base: Point, j: usize| u.dot(hull[j] - base);

    // Calipers for edge 0 found by scanning, then advanced monotonically.
    let u0 = edge_unit(0);
    let argbest = |f: &dyn Fn(usize) -> f64| {
        (0..m).fold(0, |best, j| if f(j) > f(best) { j } else { best })
    };
    let mut far = argbest(&|j| height(u0, hull[0], j));
    let mut right = argbest(&|j| along(u0, hull[0], j));
    let mut left = argbest(&|j| -along(u0, hull[0], j));

    let mut best: Option<(f64, [Point; 4])> = None;
    for i in 0..m {
        let u = edge_unit(i);
        let base = hull[i];
        for _ in 0..m {
            let next = (far + 1) % m;
            if height(u, base, next) > height(u, base, far) {
                far = next;
            } else {
                break;
            }
        }
        for _ in 0..m {
            let next = (right + 1) % m;
            if along(u, base, next) > along(u, base, right) {
                right = next;
            } else {
                break;
            }
        }
        for _ in 0..m {
            let next = (left + 1) % m;
            if along(u, base, next) < along(u, base, left) {
                left = next;
            } else {
                break;
            }
        }
        let h = height(u, base, far);
        let lo = along(u, base, left);
        let hi = along(u, base, right);
        let area = h * (hi - lo);
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let normal = Point::new(-u.y, u.x);
            let a = base + u * lo;
            let b = base + u * hi;
            best = Some((area, [a, b, b + normal * h, a + normal * h]));
        }
    }
    let (_, corners) = best.expect("hull has at least three edges");
    Polygon::new(corners.to_vec())
}

/// Intersection over union of two polygons, measured by rasterizing both
/// onto a shared grid with `resolution` pixels per unit.
///
/// # Panics
/// Panics if `resolution` is not a positive finite number.
pub fn polygon_iou(a: &Polygon, b: &Polygon, resolution: f64) -> f64 {
    let stats = raster::overlap_stats(a, b, resolution);
    stats.iou()
}

/// Signed distance from `p` to the line through `a` and `b`; positive on
/// the outward side of a clockwise-on-screen edge `a → b`.
pub fn signed_line_distance(p: Point, a: Point, b: Point) -> f64 {
    let dir = b - a;
    -(dir.cross(p - a)) / dir.norm()
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Closed-segment intersection test, touching counts.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let eps = 1e-12;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    (d1.abs() <= eps && on_segment(c, d, a))
        || (d2.abs() <= eps && on_segment(c, d, b))
        || (d3.abs() <= eps && on_segment(a, b, c))
        || (d4.abs() <= eps && on_segment(a, b, d))
}

/// Douglas–Peucker simplification of a closed ring.
///
/// The ring is split at vertex 0 and the vertex farthest from it; each
/// chain is simplified independently with tolerance `epsilon`.
pub fn simplify_closed(points: &[Point], epsilon: f64) -> Vec<Point> {
    simplify_closed_indices(points, epsilon)
        .into_iter()
        .map(|i| points[i])
        .collect()
}

/// Indices (ascending) of the vertices kept by [`simplify_closed`].
pub fn simplify_closed_indices(points: &[Point], epsilon: f64) -> Vec<usize> {
    let n = points.len();
    if n < 4 || epsilon <= 0.0 {
        return (0..n).collect();
    }
    let far = (1..n)
        .max_by(|&i, &j| {
            points[0]
                .distance(points[i])
                .total_cmp(&points[0].distance(points[j]))
        })
        .unwrap_or(0);
    if far == 0 {
        return vec![0];
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let ring = |i: usize| points[i % n];
    let mut stack = vec![(0usize, far), (far, n)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let (a, b) = (ring(s), ring(e));
        let (mut idx, mut dmax) = (s, 0.0);
        for i in (s + 1)..e {
            let d = point_segment_distance(ring(i), a, b);
            if d > dmax {
                dmax = d;
                idx = i;
            }
        }
        if dmax > epsilon {
            keep[idx % n] = true;
            stack.push((s, idx));
            stack.push((idx, e));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Drops vertices whose incident edges are (nearly) collinear or that
/// coincide with their predecessor.
pub fn remove_collinear(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let drop = (0..n).find(|&i| {
            let p = pts[i];
            let v1 = p - pts[(i + n - 1) % n];
            let v2 = p - pts[(i + 1) % n];
            let (l1, l2) = (v1.norm(), v2.norm());
            l1 == 0.0 || l2 == 0.0 || (v1.cross(v2) / (l1 * l2)).abs() < ANGLE_TOLERANCE
        });
        match drop {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(f64, f64)]) -> Polygon {
        Polygon::from_coords(c).unwrap()
    }

    fn assert_vertices(p: &Polygon, expected: &[(f64, f64)], tol: f64) {
        assert_eq!(p.len(), expected.len(), "{p:?}");
        for (v, &(x, y)) in p.vertices().iter().zip(expected) {
            assert!(
                (v.x - x).abs() <= tol && (v.y - y).abs() <= tol,
                "{v:?} vs ({x}, {y}) in {p:?}"
            );
        }
    }

    const SQUARE: [(f64, f64); 4] = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)];
    const TRIANGLE: [(f64, f64); 3] = [(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)];

    #[test]
    fn signed_area_examples() {
        let unit = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(signed_area(&unit).unwrap(), 1.0);
        let rev = poly(&[(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)]);
        assert_eq!(signed_area(&rev).unwrap(), -1.0);
        assert_eq!(signed_area(&poly(&TRIANGLE)).unwrap(), 6.0);
        assert!(matches!(
            signed_area(&poly(&[(0.0, 0.0), (1.0, 1.0)])),
            Err(Error::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn ensure_clockwise_examples() {
        let cw = poly(&SQUARE);
        assert_eq!(ensure_clockwise(&cw).unwrap(), cw);
        let ccw = poly(&[(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)]);
        let fixed = ensure_clockwise(&ccw).unwrap();
        assert_vertices(&fixed, &[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)], 0.0);
        let line = poly(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(matches!(
            ensure_clockwise(&line),
            Err(Error::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn expand_square_is_plus_minus_d() {
        let out = expand_polygon(&poly(&SQUARE), 1.0).unwrap();
        assert_vertices(&out, &[(-1.0, -1.0), (5.0, -1.0), (5.0, 5.0), (-1.0, 5.0)], 1e-12);
    }

    #[test]
    fn expand_triangle() {
        let out = expand_polygon(&poly(&TRIANGLE), 1.0).unwrap();
        assert_vertices(&out, &[(-1.0, -1.0), (7.0, -1.0), (-1.0, 5.0)], 1e-9);
    }

    #[test]
    fn expand_zero_is_identity() {
        let p = poly(&[(0.3, 0.1), (0.0, 4.0), (5.0, 2.0)]);
        assert_eq!(expand_polygon(&p, 0.0).unwrap(), p);
    }

    #[test]
    fn expand_counterclockwise_keeps_orientation() {
        let ccw = poly(&[(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0)]);
        let out = expand_polygon(&ccw, 1.0).unwrap();
        assert_vertices(&out, &[(-1.0, -1.0), (-1.0, 5.0), (5.0, 5.0), (5.0, -1.0)], 1e-12);
    }

    #[test]
    fn expand_concave_moves_every_edge_outward() {
        // L-shape, clockwise on screen.
        let l = poly(&[
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 2.0),
            (2.0, 2.0),
            (2.0, 4.0),
            (0.0, 4.0),
        ]);
        let out = expand_polygon(&l, 0.5).unwrap();
        assert_vertices(
            &out,
            &[
                (-0.5, -0.5),
                (4.5, -0.5),
                (4.5, 2.5),
                (2.5, 2.5),
                (2.5, 4.5),
                (-0.5, 4.5),
            ],
            1e-12,
        );
    }

    #[test]
    fn expand_rejects_collinear_vertex() {
        let p = poly(&[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]);
        match expand_polygon(&p, 1.0) {
            Err(Error::DegenerateAngle { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected degenerate angle, got {other:?}"),
        }
    }

    #[test]
    fn expand_error_index_follows_caller_order() {
        let p = poly(&[(0.0, 0.0), (0.0, 4.0), (4.0, 4.0), (4.0, 0.0), (2.0, 0.0)]);
        match expand_polygon(&p, 1.0) {
            Err(Error::DegenerateAngle { index, .. }) => assert_eq!(index, 4),
            other => panic!("expected degenerate angle, got {other:?}"),
        }
    }

    #[test]
    fn expand_rejects_negative_distance() {
        assert!(matches!(
            expand_polygon(&poly(&SQUARE), -1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn shrink_examples() {
        let big = poly(&[(-1.0, -1.0), (7.0, -1.0), (-1.0, 5.0)]);
        let out = shrink_polygon(&big, 1.0).unwrap().unwrap();
        assert_vertices(&out, &TRIANGLE, 1e-9);
        assert!(shrink_polygon(&poly(&SQUARE), 2.0).unwrap().is_none());
        assert!(shrink_polygon(&poly(&SQUARE), 3.0).unwrap().is_none());
        let p = poly(&TRIANGLE);
        assert_eq!(shrink_polygon(&p, 0.0).unwrap().unwrap(), p);
    }

    #[test]
    fn shrink_drops_collapsed_short_edge() {
        // Chamfered square: the 0.2-long chamfer vanishes well before the
        // square itself.
        let p = poly(&[
            (0.0, 0.0),
            (9.8, 0.0),
            (10.0, 0.2),
            (10.0, 10.0),
            (0.0, 10.0),
        ]);
        let out = shrink_polygon(&p, 2.0).unwrap().unwrap();
        assert_eq!(out.len(), 4);
        assert_vertices(&out, &[(2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0)], 1e-9);
    }

    #[test]
    fn shrink_concave_round_trips() {
        let l = poly(&[
            (0.0, 0.0),
            (8.0, 0.0),
            (8.0, 4.0),
            (4.0, 4.0),
            (4.0, 8.0),
            (0.0, 8.0),
        ]);
        let s = shrink_polygon(&l, 1.0).unwrap().unwrap();
        let back = expand_polygon(&s, 1.0).unwrap();
        for (a, b) in back.vertices().iter().zip(l.vertices()) {
            assert!(a.distance(*b) < 1e-9);
        }
    }

    #[test]
    fn offset_distance_examples() {
        let sq = poly(&SQUARE);
        assert!((offset_distance_for_ratio(&sq, 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(offset_distance_for_ratio(&sq, 1.0).unwrap(), 0.0);
        assert!((offset_distance_for_ratio(&sq, 0.4).unwrap() - 0.84).abs() < 1e-12);
        assert!(matches!(
            offset_distance_for_ratio(&sq, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            offset_distance_for_ratio(&sq, 1.5),
            Err(Error::InvalidParameter(_))
        ));
        let zero = poly(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        assert!(matches!(
            offset_distance_for_ratio(&zero, 0.5),
            Err(Error::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn min_area_rect_examples() {
        let pts: Vec<Point> = [(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]
            .into_iter()
            .map(Point::from)
            .collect();
        let r = min_area_rect(&pts).unwrap();
        assert!((signed_area(&r).unwrap() - 8.0).abs() < 1e-12);

        let diamond: Vec<Point> = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (1.0, -1.0)]
            .into_iter()
            .map(Point::from)
            .collect();
        let r = min_area_rect(&diamond).unwrap();
        assert!((signed_area(&r).unwrap() - 2.0).abs() < 1e-12);
        for c in r.vertices() {
            assert!(diamond.iter().any(|d| d.distance(*c) < 1e-12), "{c:?}");
        }

        assert!(min_area_rect(&pts[..2]).is_err());
        let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(
            min_area_rect(&line),
            Err(Error::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn iou_examples() {
        let a = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let b = poly(&[(0.5, 0.0), (1.5, 0.0), (1.5, 1.0), (0.5, 1.0)]);
        let far = poly(&[(5.0, 5.0), (6.0, 5.0), (6.0, 6.0), (5.0, 6.0)]);
        assert_eq!(polygon_iou(&a, &a, 1.0), 1.0);
        assert_eq!(polygon_iou(&a, &far, 16.0), 0.0);
        let iou = polygon_iou(&a, &b, 64.0);
        assert!((iou - 1.0 / 3.0).abs() < 0.01, "{iou}");
        assert_eq!(polygon_iou(&b, &a, 64.0), iou);
        let flat = poly(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(polygon_iou(&a, &flat, 8.0), 0.0);
    }

    #[test]
    fn simplify_removes_staircase_noise() {
        let mut ring = Vec::new();
        for i in 0..10 {
            ring.push(Point::new(i as f64, 0.0));
        }
        for i in 0..10 {
            ring.push(Point::new(10.0, i as f64));
        }
        for i in 0..10 {
            ring.push(Point::new(10.0 - i as f64, 10.0));
        }
        for i in 0..10 {
            ring.push(Point::new(0.0, 10.0 - i as f64));
        }
        let s = remove_collinear(&simplify_closed(&ring, 0.5));
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn simple_polygon_detection() {
        assert!(poly(&SQUARE).is_simple());
        let bowtie = poly(&[(0.0, 0.0), (4.0, 4.0), (4.0, 0.0), (0.0, 4.0)]);
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn contains_counts_boundary() {
        let sq = poly(&SQUARE);
        assert!(sq.contains(Point::new(2.0, 2.0)));
        assert!(sq.contains(Point::new(4.0, 2.0)));
        assert!(!sq.contains(Point::new(4.1, 2.0)));
    }
}
