//! Oracles shared by the integration tests, written independently of the
//! library's own geometry.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use textregion::geometry::Point;
use textregion::BitMask;

pub fn centroid(v: &[Point]) -> Point {
    let n = v.len() as f64;
    let (sx, sy) = v.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Point::new(sx / n, sy / n)
}

/// Perpendicular distance from `p` to line `ab`, positive on the side away
/// from `inside`.
pub fn outward_distance(p: Point, a: Point, b: Point, inside: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = (dx * dx + dy * dy).sqrt();
    let side = |q: Point| (dx * (q.y - a.y) - dy * (q.x - a.x)) / len;
    let s = side(p);
    if side(inside) > 0.0 {
        -s
    } else {
        s
    }
}

pub fn angle_at(v: &[Point], i: usize) -> f64 {
    let n = v.len();
    let (p, q, r) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    let (ax, ay) = (p.x - q.x, p.y - q.y);
    let (bx, by) = (r.x - q.x, r.y - q.y);
    let c = (ax * bx + ay * by) / ((ax * ax + ay * ay).sqrt() * (bx * bx + by * by).sqrt());
    c.clamp(-1.0, 1.0).acos()
}

/// Convex polygon with vertices in increasing angle around `c`, which is
/// clockwise on a y-down screen.
pub fn convex_polygon(rng: &mut ChaCha8Rng, c: Point, radius: (f64, f64), min_angle: f64) -> Vec<Point> {
    loop {
        let n = rng.random_range(3..=8);
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        t.sort_by(f64::total_cmp);
        let v: Vec<Point> = t
            .iter()
            .map(|&a| {
                let r = rng.random_range(radius.0..radius.1);
                Point::new(c.x + r * a.cos(), c.y + r * a.sin())
            })
            .collect();
        let turns_right = (0..n).all(|i| {
            let (a, b, d) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
            (b.x - a.x) * (d.y - b.y) - (b.y - a.y) * (d.x - b.x) > 1e-9
        });
        if turns_right && (0..n).all(|i| angle_at(&v, i) >= min_angle) {
            return v;
        }
    }
}

/// Lower bound on the inradius: nearest edge line from the vertex centroid.
pub fn inradius_lb(v: &[Point]) -> f64 {
    let c = centroid(v);
    (0..v.len())
        .map(|i| -outward_distance(c, v[i], v[(i + 1) % v.len()], c))
        .fold(f64::INFINITY, f64::min)
}

/// Inward offset at which the first edge shrinks to a point.
pub fn collapse(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let len = ((v[j].x - v[i].x).powi(2) + (v[j].y - v[i].y).powi(2)).sqrt();
            let cot = |a: f64| 1.0 / (a / 2.0).tan();
            len / (cot(angle_at(v, i)) + cot(angle_at(v, j)))
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn seg_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

pub fn inside_convex(p: Point, v: &[Point]) -> bool {
    let c = centroid(v);
    (0..v.len()).all(|i| outward_distance(p, v[i], v[(i + 1) % v.len()], c) <= 0.0)
}

pub fn mask_iou(a: &BitMask, b: &BitMask) -> f64 {
    let (mut inter, mut uni) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += (x && y) as usize;
        uni += (x || y) as usize;
    }
    if uni == 0 {
        1.0
    } else {
        inter as f64 / uni as f64
    }
}
