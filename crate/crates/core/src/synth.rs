//! Synthetic predictions and scenes.
//!
//! Stands in for a trained network: prediction maps are derived from the
//! ground truth with seeded corruption, so inference and evaluation can run
//! end to end.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ensure_clockwise, Point, Polygon};
use crate::labels::{LabelSet, TextInstance};
use crate::raster::{BitMask, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of additive Gaussian noise on both probability
    /// maps.
    pub prob_noise_sigma: f64,
    /// Standard deviation (pixels) of additive noise on the ratio map.
    pub ratio_noise_sigma: f64,
    /// Rounds of random boundary-pixel toggling applied to each mask.
    pub boundary_jitter: u32,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prob_noise_sigma", self.prob_noise_sigma),
            ("ratio_noise_sigma", self.ratio_noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPredictions {
    pub full: Grid,
    pub central: Grid,
    pub ratio: Grid,
}

/// Toggles each boundary pixel (one with a 4-neighbour of the other value)
/// with probability one half, `rounds` times.
fn jitter_mask(mask: &BitMask, rounds: u32, rng: &mut ChaCha8Rng) -> BitMask {
    let (w, h) = mask.dims();
    let mut cur = mask.clone();
    for _ in 0..rounds {
        let mut next = cur.clone();
        for y in 0..h {
            for x in 0..w {
                let v = cur.get(x, y);
                let differs = (x > 0 && cur.get(x - 1, y) != v)
                    || (x + 1 < w && cur.get(x + 1, y) != v)
                    || (y > 0 && cur.get(x, y - 1) != v)
                    || (y + 1 < h && cur.get(x, y + 1) != v);
                if differs && rng.random_bool(0.5) {
                    next.set(x, y, !v);
                }
            }
        }
        cur = next;
    }
    cur
}

/// Ratio values on `target`, copied from the nearest (4-connected BFS) pixel
/// of `source`. Pixels outside `target` are zero.
fn propagate_ratio(ratio: &Grid, source: &BitMask, target: &BitMask) -> Grid {
    let (w, h) = ratio.dims();
    let mut out = Grid::new(w, h);
    let mut seen = source.clone();
    let mut value = vec![0.0; w * h];
    let mut queue = VecDeque::new();
    for (x, y) in source.iter_set() {
        value[y * w + x] = ratio.get(x, y);
        queue.push_back((x, y));
    }
    while let Some((x, y)) = queue.pop_front() {
        let v = value[y * w + x];
        let mut visit = |nx: usize, ny: usize| {
            if !seen.get(nx, ny) {
                seen.set(nx, ny, true);
                value[ny * w + nx] = v;
                queue.push_back((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
    for (x, y) in target.iter_set() {
        out.set(x, y, value[y * w + x]);
    }
    out
}

/// Adds N(0, sigma) to every value, then clamps into `[lo, hi]`.
pub(crate) fn perturb(grid: &mut Grid, sigma: f64, lo: f64, hi: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    for v in grid.values_mut() {
        *v = (*v + normal.sample(rng)).clamp(lo, hi);
    }
}

pub fn synth_predictions(labels: &LabelSet, noise: &NoiseConfig) -> Result<SynthPredictions> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let (full_mask, central_mask, mut ratio) = if noise.boundary_jitter == 0 {
        (
            labels.full_mask.clone(),
            labels.central_mask.clone(),
            labels.ratio_map.clone(),
        )
    } else {
        let full = jitter_mask(&labels.full_mask, noise.boundary_jitter, &mut rng);
        let central = jitter_mask(&labels.central_mask, noise.boundary_jitter, &mut rng);
        let ratio = if labels.central_mask.is_empty() {
            Grid::new(central.width(), central.height())
        } else {
            propagate_ratio(&labels.ratio_map, &labels.central_mask, &central)
        };
        (full, central, ratio)
    };
    let mut full = Grid::from_mask(&full_mask);
    let mut central = Grid::from_mask(&central_mask);
    perturb(&mut full, noise.prob_noise_sigma, 0.0, 1.0, &mut rng);
    perturb(&mut central, noise.prob_noise_sigma, 0.0, 1.0, &mut rng);
    perturb(&mut ratio, noise.ratio_noise_sigma, 0.0, f64::INFINITY, &mut rng);
    Ok(SynthPredictions {
        full,
        central,
        ratio,
    })
}

/// Kinds of generated scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// Convex quadrilaterals and curved 14-point bands.
    Mixed,
    /// Stacked pairs of thin rectangles whose full regions touch.
    Separation,
}

/// Rotated rectangle with perturbed corners; convex, clockwise.
pub fn random_quad(rng: &mut impl Rng, center: Point) -> Polygon {
    loop {
        let w = rng.random_range(48.0..120.0);
        let h = rng.random_range(18.0..40.0);
        let angle = rng.random_range(-0.6..0.6);
        let (c, s) = (f64::cos(angle), f64::sin(angle));
        let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
        let pts: Vec<Point> = corners
            .iter()
            .map(|&(u, v)| {
                let u = u * w + rng.random_range(-3.0..3.0);
                let v = v * h + rng.random_range(-2.0..2.0);
                Point::new(center.x + c * u - s * v, center.y + s * u + c * v)
            })
            .collect();
        let poly = ensure_clockwise(&Polygon::new(pts).expect("finite")).expect("nondegenerate");
        if is_convex_with_min_angle(&poly, 60f64.to_radians()) {
            return poly;
        }
    }
}

fn is_convex_with_min_angle(poly: &Polygon, min_angle: f64) -> bool {
    let v = poly.vertices();
    let n = v.len();
    (0..n).all(|i| {
        let a = v[(i + n - 1) % n] - v[i];
        let b = v[(i + 1) % n] - v[i];
        let turn = (v[i] - v[(i + n - 1) % n]).cross(v[(i + 1) % n] - v[i]);
        let angle = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos();
        turn > 0.0 && angle >= min_angle
    })
}

/// Curved band: seven points on an outer arc and seven on an inner arc, like
/// the 14-vertex annotations of curved-text datasets. Concave along the
/// inner arc; clockwise.
pub fn curved_band(rng: &mut impl Rng, center: Point) -> Polygon {
    let width = rng.random_range(28.0..40.0);
    let radius = rng.random_range(90.0..150.0);
    let length = rng.random_range(110.0..170.0);
    let span = length / radius;
    let facing = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    // Arc centre placed so the band's midpoint lands on `center`.
    let mid = -facing * PI / 2.0;
    let origin = Point::new(center.x - radius * mid.cos(), center.y - radius * mid.sin());
    let at = |r: f64, t: f64| {
        let a = mid - span / 2.0 + span * t;
        Point::new(origin.x + r * a.cos(), origin.y + r * a.sin())
    };
    let outer = radius + width / 2.0;
    let inner = radius - width / 2.0;
    let mut pts: Vec<Point> = (0..7).map(|i| at(outer, i as f64 / 6.0)).collect();
    pts.extend((0..7).rev().map(|i| at(inner, i as f64 / 6.0)));
    ensure_clockwise(&Polygon::new(pts).expect("finite")).expect("nondegenerate")
}

fn bbox_overlaps(a: &(Point, Point), b: &(Point, Point), margin: f64) -> bool {
    a.0.x - margin < b.1.x && b.0.x - margin < a.1.x && a.0.y - margin < b.1.y && b.0.y - margin < a.1.y
}

/// Places up to `count` instances made by `make` fully inside a
/// `width`×`height` frame, keeping bounding boxes (including those already
/// in `boxes`) apart.
fn place(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    count: usize,
    boxes: &mut Vec<(Point, Point)>,
    mut make: impl FnMut(&mut ChaCha8Rng, Point) -> Polygon,
) -> Vec<Polygon> {
    let (w, h) = (width as f64, height as f64);
    let mut placed: Vec<Polygon> = Vec::new();
    for _ in 0..200 {
        if placed.len() == count {
            break;
        }
        let c = Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
        let poly = make(rng, c);
        let bb = poly.bounds().expect("nonempty");
        if bb.0.x < 3.0 || bb.0.y < 3.0 || bb.1.x > w - 3.0 || bb.1.y > h - 3.0 {
            continue;
        }
        if boxes.iter().any(|b| bbox_overlaps(b, &bb, 6.0)) {
            continue;
        }
        boxes.push(bb);
        placed.push(poly);
    }
    placed
}

/// Two to four convex quads and one or two curved bands.
pub fn mixed_scene(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Vec<TextInstance> {
    let bands = rng.random_range(1..=2);
    let quads = rng.random_range(2..=4);
    let mut boxes = Vec::new();
    let mut polys = place(rng, width, height, bands, &mut boxes, curved_band);
    polys.extend(place(rng, width, height, quads, &mut boxes, random_quad));
    polys.into_iter().map(TextInstance::new).collect()
}

/// Pitch between the top edges of paired rectangles.
pub const SEPARATION_PITCHES: [u32; 3] = [2, 3, 4];

/// Stacked pairs of axis-aligned rectangles. Within a pair the top edges are
/// `pitch` px apart and each rectangle is taller than the pitch, so the two
/// full regions share a pixel row and merge into one component.
pub fn separation_scene(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Vec<TextInstance> {
    let mut out = Vec::new();
    let mut y = 4u32;
    loop {
        let pitch = SEPARATION_PITCHES[rng.random_range(0..SEPARATION_PITCHES.len())];
        // Odd heights centre the thin central strip on a pixel row.
        let tall = if pitch % 2 == 1 { pitch + 2 } else { pitch + 1 };
        if (y + pitch + tall + 4) as usize > height {
            break;
        }
        let len = rng.random_range(24..=48) as f64;
        let max_x = width as f64 - len - 12.0;
        if max_x <= 4.0 {
            break;
        }
        let x0 = rng.random_range(4.0..max_x).floor();
        let x1 = (x0 + rng.random_range(-4.0..4.0f64).round()).clamp(4.0, max_x);
        let rect = |x: f64, top: u32| {
            let t = top as f64;
            let b = t + tall as f64;
            Polygon::from_coords(&[(x, t), (x + len, t), (x + len, b), (x, b)]).expect("finite")
        };
        out.push(TextInstance::new(rect(x0, y)));
        out.push(TextInstance::new(rect(x1, y + pitch)));
        y += pitch + tall + 6;
    }
    out
}

/// `count` scenes with ids `scene_000`, `scene_001`, ...
pub fn generate_corpus(
    kind: SceneKind,
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Vec<(String, Vec<TextInstance>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let instances = match kind {
                SceneKind::Mixed => mixed_scene(&mut rng, width, height),
                SceneKind::Separation => separation_scene(&mut rng, width, height),
            };
            (format!("scene_{i:03}"), instances)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{generate_labels, RatioSampler};

    fn square_labels() -> LabelSet {
        let p = Polygon::from_coords(&[(10.0, 10.0), (50.0, 12.0), (48.0, 40.0), (12.0, 44.0)]).unwrap();
        generate_labels(
            &[TextInstance::new(p)],
            64,
            64,
            &RatioSampler::fixed(0.5).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_is_exact() {
        let labels = square_labels();
        let p = synth_predictions(&labels, &NoiseConfig::noiseless()).unwrap();
        assert_eq!(p.full, Grid::from_mask(&labels.full_mask));
        assert_eq!(p.central, Grid::from_mask(&labels.central_mask));
        assert_eq!(p.ratio, labels.ratio_map);
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let labels = square_labels();
        let cfg = NoiseConfig {
            prob_noise_sigma: 0.2,
            ratio_noise_sigma: 0.5,
            boundary_jitter: 2,
            seed: 7,
        };
        let a = synth_predictions(&labels, &cfg).unwrap();
        let b = synth_predictions(&labels, &cfg).unwrap();
        assert_eq!(a, b);
        let c = synth_predictions(&labels, &NoiseConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
        assert!(a.full.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(a.ratio.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn probability_noise_deviation() {
        let labels = square_labels();
        let target = Grid::from_mask(&labels.full_mask);
        let sigma = 0.1;
        let mad = |g: &Grid| {
            g.values()
                .iter()
                .zip(target.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / g.values().len() as f64
        };
        // Before clamping the deviation is folded-Gaussian, mean 0.8 sigma.
        let mut raw = target.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        perturb(&mut raw, sigma, f64::NEG_INFINITY, f64::INFINITY, &mut rng);
        let m = mad(&raw);
        assert!((0.06..=0.10).contains(&m), "{m}");
        // Clamping at the 0/1 targets keeps only the inward half: 0.4 sigma.
        let p = synth_predictions(
            &labels,
            &NoiseConfig {
                prob_noise_sigma: sigma,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let m = mad(&p.full);
        assert!((0.035..=0.045).contains(&m), "{m}");
    }

    #[test]
    fn jitter_keeps_ratio_on_central_pixels() {
        let labels = square_labels();
        let p = synth_predictions(
            &labels,
            &NoiseConfig {
                boundary_jitter: 1,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let d = labels.per_instance[0].distance;
        let central = p.central.threshold(0.5);
        assert_ne!(central, labels.central_mask);
        for (x, y) in central.iter_set() {
            assert_eq!(p.ratio.get(x, y), d);
        }
    }

    #[test]
    fn generated_scenes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let scene = mixed_scene(&mut rng, 256, 256);
            assert!(scene.len() >= 2);
            assert!(scene.iter().any(|i| i.polygon.len() == 14));
            for inst in &scene {
                assert!(inst.polygon.is_simple());
                let (lo, hi) = inst.polygon.bounds().unwrap();
                assert!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 256.0 && hi.y <= 256.0);
            }
        }
        let pairs = separation_scene(&mut rng, 128, 96);
        assert!(pairs.len() >= 4 && pairs.len().is_multiple_of(2));
        assert_eq!(
            generate_corpus(SceneKind::Mixed, 3, 256, 256, 9),
            generate_corpus(SceneKind::Mixed, 3, 256, 256, 9)
        );
    }
}
