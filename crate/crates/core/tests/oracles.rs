//! Library results against slow, obviously-correct reimplementations.

mod common;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textregion::eval::{evaluate, evaluate_with, DontCareRule, EvalConfig};
use textregion::geometry::{min_area_rect, offset_distance_for_ratio, polygon_iou, Point, Polygon};
use textregion::inference::Detection;
use textregion::labels::TextInstance;
use textregion::raster::{connected_components, distance_transform, rasterize_polygon, Connectivity};
use textregion::BitMask;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rect(x: f64, y: f64, w: f64, h: f64) -> Polygon {
    Polygon::from_coords(&[(x, y), (x + w, y), (x + w, y + h), (x, y + h)]).unwrap()
}

/// Largest number of disjoint (det, gt) pairs with IoU at or above `thr`.
fn best_matching(iou: &[Vec<f64>], thr: f64) -> usize {
    fn go(i: usize, iou: &[Vec<f64>], thr: f64, used: &mut Vec<bool>) -> usize {
        if i == iou.len() {
            return 0;
        }
        let mut best = go(i + 1, iou, thr, used);
        for j in 0..used.len() {
            if !used[j] && iou[i][j] >= thr {
                used[j] = true;
                best = best.max(1 + go(i + 1, iou, thr, used));
                used[j] = false;
            }
        }
        best
    }
    let gts = iou.first().map_or(0, Vec::len);
    go(0, iou, thr, &mut vec![false; gts])
}

#[test]
fn greedy_matches_exhaustive_on_small_cases() {
    let mut r = rng(3);
    let mut compared = 0;
    while compared < 300 {
        // Text instances in one image do not overlap each other, so boxes
        // are drawn from disjoint lanes; detections are jittered copies.
        let gts: Vec<TextInstance> = (0..r.random_range(0..=5))
            .map(|i| TextInstance::new(rect(r.random_range(0.0..4.0), 12.0 * i as f64, r.random_range(8.0..16.0), 8.0)))
            .collect();
        let dets: Vec<Detection> = (0..r.random_range(0..=5))
            .map(|i| {
                let y = 12.0 * i as f64 + r.random_range(-3.0..3.0);
                Detection {
                    polygon: rect(r.random_range(0.0..6.0), y, r.random_range(6.0..16.0), r.random_range(6.0..9.0)),
                    score: 0.9,
                }
            })
            .collect();
        let iou: Vec<Vec<f64>> = dets
            .iter()
            .map(|d| gts.iter().map(|g| polygon_iou(&d.polygon, &g.polygon, 4.0)).collect())
            .collect();
        let mut flat: Vec<f64> = iou.iter().flatten().copied().filter(|&v| v > 0.0).collect();
        flat.sort_by(f64::total_cmp);
        if flat.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        for thr in [0.3, 0.5, 0.7] {
            let got = evaluate(&dets, &gts, thr).true_positives;
            assert_eq!(got, best_matching(&iou, thr), "thr {thr}: {iou:?}");
        }
        compared += 1;
    }
}

#[test]
fn scores_follow_the_formulas() {
    let mut r = rng(4);
    for _ in 0..100 {
        let gts: Vec<TextInstance> = (0..r.random_range(0..6))
            .map(|i| {
                let mut t = TextInstance::new(rect(0.0, 12.0 * i as f64, 10.0, 8.0));
                t.ignore = r.random_bool(0.2);
                t
            })
            .collect();
        let dets: Vec<Detection> = (0..r.random_range(0..6))
            .map(|i| Detection {
                polygon: rect(r.random_range(0.0..3.0), 12.0 * i as f64 + r.random_range(-2.0..2.0), 10.0, 8.0),
                score: 0.8,
            })
            .collect();
        let cfg = EvalConfig {
            dont_care: DontCareRule::Iou,
            ..EvalConfig::default()
        };
        let rep = evaluate_with(&dets, &gts, &cfg).unwrap();
        let care = gts.iter().filter(|g| !g.ignore).count();
        assert_eq!(rep.num_gt, care);
        let p = if rep.num_detections == 0 { 1.0 } else { rep.true_positives as f64 / rep.num_detections as f64 };
        let rc = if care == 0 { 1.0 } else { rep.true_positives as f64 / care as f64 };
        let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
        assert!((rep.precision - p).abs() < 1e-15 && (rep.recall - rc).abs() < 1e-15);
        assert!((rep.f_measure - f).abs() < 1e-15);
    }
}

#[test]
fn distance_transform_matches_brute_force() {
    let mut r = rng(5);
    for _ in 0..60 {
        let (w, h) = (r.random_range(1..24), r.random_range(1..24));
        let p = r.random_range(0.01..0.3);
        let mask = BitMask::from_bits(w, h, (0..w * h).map(|_| r.random_bool(p)).collect()).unwrap();
        let dt = distance_transform(&mask);
        let set: Vec<(usize, usize)> = mask.iter_set().collect();
        for y in 0..h {
            for x in 0..w {
                let brute = set
                    .iter()
                    .map(|&(sx, sy)| ((sx as f64 - x as f64).powi(2) + (sy as f64 - y as f64).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
                if set.is_empty() {
                    assert_eq!(dt.get(x, y), textregion::raster::DISTANCE_SENTINEL);
                } else {
                    assert_eq!(dt.get(x, y), brute, "({x},{y}) in {w}x{h}");
                }
            }
        }
    }
}

/// Even-odd crossing test at a point.
fn crossings_inside(v: &[Point], p: Point) -> bool {
    let mut inside = false;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[test]
fn rasterize_matches_center_sampling() {
    let mut r = rng(6);
    for _ in 0..100 {
        // Star-shaped, possibly concave polygons.
        let n = r.random_range(3..12);
        let mut t: Vec<f64> = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        t.sort_by(f64::total_cmp);
        let v: Vec<Point> = t
            .iter()
            .map(|&a| {
                let rad = r.random_range(3.0..14.0);
                Point::new(16.13 + rad * a.cos(), 15.87 + rad * a.sin())
            })
            .collect();
        let Ok(poly) = Polygon::new(v.clone()) else { continue };
        let mask = rasterize_polygon(&poly, 32, 32);
        for y in 0..32 {
            for x in 0..32 {
                let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let on_edge = (0..n).any(|i| common::seg_distance(c, v[i], v[(i + 1) % n]) < 1e-9);
                if !on_edge {
                    assert_eq!(mask.get(x, y), crossings_inside(&v, c), "({x},{y})");
                }
            }
        }
    }
}

fn flood_count(mask: &BitMask, eight: bool) -> u32 {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if !mask.bits()[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.bits()[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    count
}

#[test]
fn component_counts_match_flood_fill() {
    let mut r = rng(7);
    for _ in 0..200 {
        let (w, h) = (r.random_range(1..30), r.random_range(1..30));
        let p = r.random_range(0.1..0.7);
        let mask = BitMask::from_bits(w, h, (0..w * h).map(|_| r.random_bool(p)).collect()).unwrap();
        assert_eq!(connected_components(&mask, Connectivity::Four).count(), flood_count(&mask, false));
        assert_eq!(connected_components(&mask, Connectivity::Eight).count(), flood_count(&mask, true));
    }
}

#[test]
fn min_area_rect_matches_angle_sweep() {
    let mut r = rng(8);
    for _ in 0..50 {
        let pts: Vec<Point> = (0..r.random_range(3..20))
            .map(|_| Point::new(r.random_range(-10.0..10.0), r.random_range(-5.0..5.0)))
            .collect();
        let got = min_area_rect(&pts).unwrap();
        let mut best = f64::INFINITY;
        for k in 0..20_000 {
            let a = std::f64::consts::FRAC_PI_2 * k as f64 / 20_000.0;
            let (c, s) = (a.cos(), a.sin());
            let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in &pts {
                let (u, v) = (p.x * c + p.y * s, -p.x * s + p.y * c);
                lo_u = lo_u.min(u);
                hi_u = hi_u.max(u);
                lo_v = lo_v.min(v);
                hi_v = hi_v.max(v);
            }
            best = best.min((hi_u - lo_u) * (hi_v - lo_v));
        }
        // The sweep only approaches the optimum from above.
        assert!(got.area() <= best + 1e-9, "{} vs sweep {best}", got.area());
        assert!(got.area() >= best * (1.0 - 1e-3), "{} vs sweep {best}", got.area());
        for p in &pts {
            assert!(got.contains(*p) || got.distance_to_boundary(*p) < 1e-9);
        }
    }
}

#[test]
fn offset_distance_follows_area_over_perimeter() {
    let mut r = rng(9);
    for _ in 0..100 {
        let v = common::convex_polygon(&mut r, Point::new(0.0, 0.0), (3.0, 30.0), 0.3);
        let ratio = r.random_range(0.05..0.95);
        let n = v.len();
        let area: f64 = 0.5 * (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum::<f64>().abs();
        let perim: f64 = (0..n).map(|i| v[i].distance(v[(i + 1) % n])).sum();
        let want = area * (1.0 - ratio * ratio) / perim;
        let got = offset_distance_for_ratio(&Polygon::new(v).unwrap(), ratio).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}
