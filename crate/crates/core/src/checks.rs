//! Seeded geometry property suite and the random polygons it runs on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::{
    expand_polygon, shrink_polygon, signed_line_distance, Point, Polygon,
};
use crate::raster::{distance_transform, rasterize_polygon};

/// Interior angle at every vertex of a clockwise polygon, in radians.
pub fn interior_angles(poly: &Polygon) -> Vec<f64> {
    let v = poly.vertices();
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[(i + n - 1) % n] - v[i];
            let b = v[(i + 1) % n] - v[i];
            (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
        })
        .collect()
}

/// Random convex clockwise polygon with 3..=8 vertices around `center`,
/// vertex radii in `radius`, and every interior angle at least
/// `min_angle` radians.
pub fn random_convex_polygon(
    rng: &mut impl Rng,
    center: Point,
    radius: (f64, f64),
    min_angle: f64,
) -> Polygon {
    loop {
        let n = rng.random_range(3..=8);
        let mut angles: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let pts: Vec<Point> = angles
            .iter()
            .map(|&a| {
                let r = rng.random_range(radius.0..radius.1);
                Point::new(center.x + r * a.cos(), center.y + r * a.sin())
            })
            .collect();
        let Ok(poly) = Polygon::new(pts) else {
            continue;
        };
        // Increasing angle in y-down coordinates runs clockwise on screen.
        let v = poly.vertices();
        let convex = (0..n).all(|i| {
            let e1 = v[(i + 1) % n] - v[i];
            let e2 = v[(i + 2) % n] - v[(i + 1) % n];
            e1.cross(e2) > 0.0
        });
        if convex && interior_angles(&poly).iter().all(|&a| a >= min_angle) {
            return poly;
        }
    }
}

/// Smallest distance from the vertex centroid to any edge line. For a
/// convex polygon this bounds the inradius from below.
pub fn inradius_lower_bound(poly: &Polygon) -> f64 {
    let v = poly.vertices();
    let n = v.len() as f64;
    let c = v.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n);
    poly.edges()
        .map(|(a, b)| -signed_line_distance(c, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Largest inward offset before some edge of a convex polygon shrinks to
/// zero length.
pub fn collapse_distance(poly: &Polygon) -> f64 {
    let v = poly.vertices();
    let n = v.len();
    let angles = interior_angles(poly);
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let cot = |a: f64| 1.0 / (a / 2.0).tan();
            v[i].distance(v[j]) / (cot(angles[i]) + cot(angles[j]))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Offset distance for a convex polygon: uniform in (0, half the inradius
/// bound], kept below nine tenths of the collapse distance.
pub fn random_offset(rng: &mut impl Rng, poly: &Polygon) -> f64 {
    let cap = 0.5 * inradius_lower_bound(poly);
    let d = rng.random_range(0.0..cap).max(cap * 1e-3);
    d.min(0.9 * collapse_distance(poly))
}

/// Max deviation of each expanded edge's endpoints from the source edge
/// offset by `distance`.
pub fn edge_offset_error(src: &Polygon, expanded: &Polygon, distance: f64) -> f64 {
    let (p, q) = (src.vertices(), expanded.vertices());
    let n = p.len();
    (0..n)
        .flat_map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            [q[i], q[(i + 1) % n]].map(|x| (signed_line_distance(x, a, b) - distance).abs())
        })
        .fold(0.0, f64::max)
}

pub fn max_vertex_error(a: &Polygon, b: &Polygon) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| p.distance(*q))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// Description of the first failing trial.
    pub first_failure: Option<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: 0,
            failed: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }
}

pub const EDGE_TOLERANCE: f64 = 1e-9;
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;
const GRID: usize = 64;

/// Runs the suite:
/// - `edge_distance`: every expanded edge lies `d` from its source edge;
/// - `round_trip`: expanding the shrunk polygon restores the original;
/// - `distance_containment`: on a 64×64 raster the expansion covers every
///   pixel within `d` of the polygon's pixels.
pub fn run_geometry_checks(trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edge = CheckResult::new("edge_distance");
    let mut trip = CheckResult::new("round_trip");
    let mut contain = CheckResult::new("distance_containment");
    let center = Point::new(GRID as f64 / 2.0, GRID as f64 / 2.0);
    for t in 0..trials {
        let poly = random_convex_polygon(&mut rng, center, (5.0, 25.0), 20f64.to_radians());
        let d = random_offset(&mut rng, &poly);
        match expand_polygon(&poly, d) {
            Ok(q) => {
                let err = edge_offset_error(&poly, &q, d);
                edge.record(err <= EDGE_TOLERANCE, || format!("trial {t}: edge error {err:e}"));
            }
            Err(e) => edge.record(false, || format!("trial {t}: {e}")),
        }
        let back = match shrink_polygon(&poly, d) {
            Ok(Some(s)) => expand_polygon(&s, d).ok(),
            _ => None,
        };
        let err = back.map_or(f64::INFINITY, |b| max_vertex_error(&poly, &b));
        trip.record(err <= ROUND_TRIP_TOLERANCE, || {
            format!("trial {t}: round-trip error {err:e}")
        });

        let small = random_convex_polygon(&mut rng, center, (15.0, 25.0), 60f64.to_radians());
        let dd = rng.random_range(1.0..3.0);
        let ok = expand_polygon(&small, dd).is_ok_and(|q| {
            let base = rasterize_polygon(&small, GRID, GRID);
            let dist = distance_transform(&base);
            let grown = rasterize_polygon(&q, GRID, GRID);
            (0..GRID).all(|y| (0..GRID).all(|x| dist.get(x, y) > dd || grown.get(x, y)))
        });
        contain.record(ok, || format!("trial {t}: pixel within {dd} not covered"));
    }
    CheckReport {
        trials,
        seed,
        checks: vec![edge, trip, contain],
    }
}
