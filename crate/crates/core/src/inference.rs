//! Post-processing: central-text components → contours → polygon expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    expand_polygon, min_area_rect, remove_collinear, Point, Polygon,
};
use crate::raster::{
    check_dims, connected_components, rasterize_polygon, trace_outline, BitMask, Connectivity,
    Grid, LabelGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioAggregation {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub central_threshold: f64,
    pub full_threshold: f64,
    /// Components with fewer pixels are discarded.
    pub min_component_area: usize,
    pub min_score: f64,
    /// Use the minimum-area rectangle of each component instead of its
    /// traced contour.
    pub quad_mode: bool,
    pub ratio_aggregation: RatioAggregation,
    /// Binarize the central map only where the full map passes
    /// `full_threshold`.
    pub gate_with_full: bool,
    /// Largest distance (pixels) between a fitted outline edge and the
    /// pixel boundary it replaces.
    pub simplify_tolerance: f64,
    /// Added to the expansion distance of traced outlines.
    pub contour_offset: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            central_threshold: 0.5,
            full_threshold: 0.5,
            min_component_area: 16,
            min_score: 0.6,
            quad_mode: false,
            ratio_aggregation: RatioAggregation::Mean,
            gate_with_full: true,
            simplify_tolerance: 0.75,
            contour_offset: 0.0,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("central_threshold", self.central_threshold)?;
        unit("full_threshold", self.full_threshold)?;
        if self.min_component_area < 1 {
            return Err(Error::Config("min_component_area must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(Error::Config(format!(
                "min_score must lie in [0, 1], got {}",
                self.min_score
            )));
        }
        if !(self.simplify_tolerance >= 0.0 && self.simplify_tolerance.is_finite()) {
            return Err(Error::Config("simplify_tolerance must be >= 0".into()));
        }
        if !self.contour_offset.is_finite() {
            return Err(Error::Config("contour_offset must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub polygon: Polygon,
    pub score: f64,
}

/// Per-component record kept for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: u32,
    pub pixels: usize,
    pub distance: f64,
    /// Polygon that was expanded (simplified contour or rectangle).
    pub source: Polygon,
    /// The contour could not be used and the pixel-corner rectangle was
    /// expanded instead.
    pub fallback: bool,
    pub score: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub components: usize,
    pub after_area_filter: usize,
    pub candidates: Vec<Candidate>,
}

fn aggregate(values: &mut [f64], how: RatioAggregation) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    match how {
        RatioAggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        RatioAggregation::Median => {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            if n % 2 == 1 {
                values[n / 2]
            } else {
                0.5 * (values[n / 2 - 1] + values[n / 2])
            }
        }
    }
}

/// The pixel-edge ring encloses exactly `pixels` unit squares, so a fitted
/// outline whose area strays far from that count has lost the shape.
fn usable(poly: &Polygon, pixels: usize) -> bool {
    let n = pixels as f64;
    let a = poly.area();
    poly.len() >= 3 && a > 0.75 * n && a < 1.33 * n && poly.is_simple()
}

/// Rectangle around the pixel squares themselves; no half-pixel correction
/// needed.
fn pixel_corner_rect(pixels: &[(usize, usize)]) -> Result<Polygon> {
    let corners: Vec<Point> = pixels
        .iter()
        .flat_map(|&(x, y)| {
            let (x, y) = (x as f64, y as f64);
            [
                Point::new(x, y),
                Point::new(x + 1.0, y),
                Point::new(x + 1.0, y + 1.0),
                Point::new(x, y + 1.0),
            ]
        })
        .collect();
    min_area_rect(&corners)
}

/// Total-least-squares line through `pts`: (centroid, unit direction).
fn fit_line(pts: &[Point]) -> (Point, Point) {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in pts {
        let q = p - c;
        sxx += q.x * q.x;
        sxy += q.x * q.y;
        syy += q.y * q.y;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (c, Point::new(theta.cos(), theta.sin()))
}

fn project(p: Point, (c, u): (Point, Point)) -> Point {
    c + u * (p - c).dot(u)
}

fn crack_mids(ring: &[Point], a: usize, b: usize) -> Vec<Point> {
    let n = ring.len();
    let steps = match (b + n - a) % n {
        0 => n,
        s => s,
    };
    (0..steps)
        .map(|s| (ring[(a + s) % n] + ring[(a + s + 1) % n]) * 0.5)
        .collect()
}

fn edge_line(ring: &[Point], a: usize, b: usize) -> (Point, Point) {
    let mids = crack_mids(ring, a, b);
    if mids.len() < 2 {
        let (p, q) = (ring[a], ring[b]);
        let d = q - p;
        (p, d * (1.0 / d.norm()))
    } else {
        fit_line(&mids)
    }
}

fn max_residual(ring: &[Point], a: usize, b: usize) -> f64 {
    let mids = crack_mids(ring, a, b);
    let line = fit_line(&mids);
    mids.iter()
        .map(|&p| p.distance(project(p, line)))
        .fold(0.0, f64::max)
}

/// Bottom-up polygon fit of a closed pixel-edge ring.
///
/// Starts from every staircase corner and repeatedly removes the corner
/// whose two adjacent runs are best explained by one straight line, while
/// that line stays within `tolerance` of every boundary step midpoint.
/// Returns the kept ring indices.
fn merge_runs(ring: &[Point], tolerance: f64) -> Vec<usize> {
    let n = ring.len();
    let mut kept: Vec<usize> = (0..n)
        .filter(|&i| {
            let d1 = ring[i] - ring[(i + n - 1) % n];
            let d2 = ring[(i + 1) % n] - ring[i];
            d1.cross(d2) != 0.0
        })
        .collect();
    let cost = |kept: &[usize], i: usize| {
        let k = kept.len();
        max_residual(ring, kept[(i + k - 1) % k], kept[(i + 1) % k])
    };
    let mut costs: Vec<f64> = (0..kept.len()).map(|i| cost(&kept, i)).collect();
    while kept.len() > 3 {
        let (best, &c) = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if c > tolerance {
            break;
        }
        kept.remove(best);
        costs.remove(best);
        let k = kept.len();
        for i in [(best + k - 1) % k, best % k] {
            costs[i] = cost(&kept, i);
        }
    }
    kept
}

/// Replaces each kept edge by the best-fit line through the unit boundary
/// steps it covers, then re-intersects neighbouring lines. A pixel staircase
/// straddles the true edge, so the fitted line is unbiased where the chord
/// joining two staircase corners is not.
fn refine_outline(ring: &[Point], kept: &[usize]) -> Vec<Point> {
    let k = kept.len();
    let lines: Vec<(Point, Point)> = (0..k)
        .map(|i| edge_line(ring, kept[i], kept[(i + 1) % k]))
        .collect();
    (0..k)
        .map(|i| {
            let prev = lines[(i + k - 1) % k];
            let next = lines[i];
            let anchor = ring[kept[i]];
            let denom = prev.1.cross(next.1);
            let fallback = (project(anchor, prev) + project(anchor, next)) * 0.5;
            if denom.abs() < 1e-9 {
                return fallback;
            }
            let t = (next.0 - prev.0).cross(next.1) / denom;
            let hit = prev.0 + prev.1 * t;
            if hit.distance(anchor) <= MAX_CORNER_SHIFT {
                hit
            } else {
                fallback
            }
        })
        .collect()
}

/// Meeting point of the lines through the edges either side of edge `k`,
/// if it lies close to that edge.
fn corner_behind(pts: &[Point], k: usize) -> Option<Point> {
    let n = pts.len();
    let at = |i: usize| pts[i % n];
    let (p0, p1) = (at(k + n - 1), at(k));
    let (q0, q1) = (at(k + 1), at(k + 2));
    let (u, v) = (p1 - p0, q1 - q0);
    let denom = u.cross(v);
    if denom.abs() < 1e-9 {
        return None;
    }
    let hit = p0 + u * ((q0 - p0).cross(v) / denom);
    (hit.distance((p1 + q0) * 0.5) <= MAX_CORNER_SHIFT + SHORT_EDGE).then_some(hit)
}

/// Cleans up artifacts of fitting lines to a few staircase steps, which a
/// large expansion distance would otherwise stretch into miter spikes or
/// cut corners. Edges shorter than `SHORT_EDGE` are collapsed onto the
/// corner their neighbours form when that corner is close by; vertices
/// turning sharper than `SPIKE_ANGLE` are dropped.
fn drop_spikes(mut pts: Vec<Point>) -> Vec<Point> {
    loop {
        let n = pts.len();
        if n <= 3 {
            return pts;
        }
        let short = |k: usize| pts[k].distance(pts[(k + 1) % n]) < SHORT_EDGE;
        if let Some((k, hit)) = (0..n)
            .filter(|&k| short(k))
            .find_map(|k| corner_behind(&pts, k).map(|h| (k, h)))
        {
            pts[k] = hit;
            pts.remove((k + 1) % n);
            continue;
        }
        let spike = (0..n).find(|&i| {
            let a = pts[(i + n - 1) % n] - pts[i];
            let b = pts[(i + 1) % n] - pts[i];
            let angle = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos();
            angle < SPIKE_ANGLE
        });
        match spike {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

const SPIKE_ANGLE: f64 = 30.0 * std::f64::consts::PI / 180.0;
const SHORT_EDGE: f64 = 3.0;

/// Refined corners further than this from their staircase corner are
/// distrusted.
const MAX_CORNER_SHIFT: f64 = 2.0;

fn component_outline(
    labels: &LabelGrid,
    label: u32,
    pixels: &[(usize, usize)],
    cfg: &PostprocessConfig,
) -> Result<Option<Polygon>> {
    if cfg.quad_mode {
        let centers: Vec<Point> = pixels
            .iter()
            .map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
            .collect();
        return Ok(min_area_rect(&centers)
            .ok()
            .and_then(|r| expand_polygon(&r, 0.5).ok()));
    }
    let ring = trace_outline(labels, label)?;
    let kept = merge_runs(&ring, cfg.simplify_tolerance);
    if kept.len() < 3 {
        return Ok(None);
    }
    let refined = Polygon::new(drop_spikes(remove_collinear(&refine_outline(&ring, &kept))))?;
    if usable(&refined, pixels.len()) {
        return Ok(Some(refined));
    }
    let plain = Polygon::new(remove_collinear(
        &kept.iter().map(|&i| ring[i]).collect::<Vec<_>>(),
    ))?;
    Ok(usable(&plain, pixels.len()).then_some(plain))
}

fn clamp_to_image(poly: &Polygon, width: usize, height: usize) -> Result<Polygon> {
    Polygon::new(
        poly.vertices()
            .iter()
            .map(|p| {
                Point::new(
                    p.x.clamp(0.0, width as f64),
                    p.y.clamp(0.0, height as f64),
                )
            })
            .collect(),
    )
}

fn mean_over(grid: &Grid, mask: &BitMask) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in mask.iter_set() {
        sum += grid.get(x, y);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Turns the three prediction maps into scored text polygons.
pub fn extract_detections(
    full: &Grid,
    central: &Grid,
    ratio: &Grid,
    cfg: &PostprocessConfig,
) -> Result<Vec<Detection>> {
    Ok(extract_detections_with_diagnostics(full, central, ratio, cfg)?.0)
}

pub fn extract_detections_with_diagnostics(
    full: &Grid,
    central: &Grid,
    ratio: &Grid,
    cfg: &PostprocessConfig,
) -> Result<(Vec<Detection>, Diagnostics)> {
    check_dims(full.dims(), central.dims())?;
    check_dims(full.dims(), ratio.dims())?;
    cfg.validate()?;
    let (width, height) = full.dims();

    let mut kernel = central.threshold(cfg.central_threshold);
    if cfg.gate_with_full {
        kernel = kernel.and(&full.threshold(cfg.full_threshold))?;
    }
    let labels = connected_components(&kernel, Connectivity::Eight);
    let mut components: Vec<Vec<(usize, usize)>> = vec![Vec::new(); labels.count() as usize + 1];
    for y in 0..height {
        for x in 0..width {
            let l = labels.get(x, y);
            if l != 0 {
                components[l as usize].push((x, y));
            }
        }
    }

    let mut diag = Diagnostics {
        components: labels.count() as usize,
        ..Default::default()
    };
    let mut detections: Vec<(u32, Detection)> = Vec::new();
    for label in 1..=labels.count() {
        let pixels = &components[label as usize];
        if pixels.len() < cfg.min_component_area {
            continue;
        }
        diag.after_area_filter += 1;
        let mut values: Vec<f64> = pixels.iter().map(|&(x, y)| ratio.get(x, y)).collect();
        let distance = aggregate(&mut values, cfg.ratio_aggregation).max(0.0);

        let outline = component_outline(&labels, label, pixels, cfg)?;
        let expanded = outline
            .as_ref()
            .and_then(|poly| expand_polygon(poly, (distance + cfg.contour_offset).max(0.0)).ok());
        let (source, polygon, fallback) = match (outline, expanded) {
            (Some(src), Some(out)) => (src, out, false),
            _ => {
                let rect = pixel_corner_rect(pixels)?;
                let out = expand_polygon(&rect, distance)?;
                (rect, out, true)
            }
        };
        let polygon = clamp_to_image(&polygon, width, height)?;
        let covered = rasterize_polygon(&polygon, width, height);
        let score = mean_over(full, &covered);
        let kept = score >= cfg.min_score;
        diag.candidates.push(Candidate {
            label,
            pixels: pixels.len(),
            distance,
            source,
            fallback,
            score,
            kept,
        });
        if kept {
            detections.push((label, Detection { polygon, score }));
        }
    }
    detections.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
    Ok((detections.into_iter().map(|(_, d)| d).collect(), diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_iou;
    use crate::labels::{generate_labels, RatioSampler, TextInstance};

    fn rect(x0: f64, y0: f64, w: f64, h: f64) -> Polygon {
        Polygon::from_coords(&[(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]).unwrap()
    }

    fn perfect_maps(instances: &[TextInstance], w: usize, h: usize, r: f64) -> (Grid, Grid, Grid) {
        let labels = generate_labels(instances, w, h, &RatioSampler::fixed(r).unwrap(), 0).unwrap();
        (
            Grid::from_mask(&labels.full_mask),
            Grid::from_mask(&labels.central_mask),
            labels.ratio_map,
        )
    }

    #[test]
    fn single_convex_instance_round_trips() {
        let poly = Polygon::from_coords(&[(20.0, 24.0), (100.0, 16.0), (108.0, 60.0), (24.0, 68.0)])
            .unwrap();
        let (full, central, ratio) =
            perfect_maps(&[TextInstance::new(poly.clone())], 128, 96, 0.5);
        let dets = extract_detections(&full, &central, &ratio, &PostprocessConfig::default()).unwrap();
        assert_eq!(dets.len(), 1);
        let iou = polygon_iou(&dets[0].polygon, &poly, 8.0);
        assert!(iou >= 0.99, "iou {iou}");
    }

    #[test]
    fn quad_mode_round_trips() {
        let poly = rect(8.0, 8.0, 40.0, 16.0);
        let (full, central, ratio) = perfect_maps(&[TextInstance::new(poly.clone())], 64, 32, 0.4);
        let cfg = PostprocessConfig {
            quad_mode: true,
            ..Default::default()
        };
        let dets = extract_detections(&full, &central, &ratio, &cfg).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].polygon.len(), 4);
        // Central pixels span centers 13.5..=42.5 by 13.5..=18.5, so the
        // rectangle is [13, 43] x [13, 19] grown by d = 640 * 0.84 / 112.
        let (lo, hi) = dets[0].polygon.bounds().unwrap();
        for (got, want) in [(lo.x, 8.2), (lo.y, 8.2), (hi.x, 47.8), (hi.y, 23.8)] {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((dets[0].polygon.area() - 39.6 * 15.6).abs() < 1e-9);
    }

    #[test]
    fn empty_maps_give_nothing() {
        let z = Grid::new(16, 16);
        let dets = extract_detections(&z, &z, &z, &PostprocessConfig::default()).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn adjacent_rectangles_give_two_detections() {
        let a = rect(4.0, 4.0, 30.0, 4.0);
        let b = rect(4.0, 7.0, 30.0, 4.0);
        let (full, central, ratio) =
            perfect_maps(&[TextInstance::new(a.clone()), TextInstance::new(b.clone())], 40, 16, 0.5);
        let cfg = PostprocessConfig::default();
        let (dets, diag) = extract_detections_with_diagnostics(&full, &central, &ratio, &cfg).unwrap();
        assert_eq!(diag.components, 2);
        assert_eq!(dets.len(), 2);
        for gt in [&a, &b] {
            let best = dets
                .iter()
                .map(|d| polygon_iou(&d.polygon, gt, 1.0))
                .fold(0.0, f64::max);
            assert!(best > 0.5, "{best}");
        }
    }

    #[test]
    fn shape_and_config_errors() {
        let a = Grid::new(8, 8);
        let b = Grid::new(8, 7);
        assert!(matches!(
            extract_detections(&a, &b, &a, &PostprocessConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
        let bad = PostprocessConfig {
            central_threshold: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            extract_detections(&a, &a, &a, &bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn low_score_components_are_dropped() {
        let mut central = Grid::new(20, 20);
        for y in 5..12 {
            for x in 5..12 {
                central.set(x, y, 1.0);
            }
        }
        let full = Grid::filled(20, 20, 0.55);
        let ratio = Grid::filled(20, 20, 1.0);
        let (dets, diag) =
            extract_detections_with_diagnostics(&full, &central, &ratio, &PostprocessConfig::default())
                .unwrap();
        assert!(dets.is_empty());
        assert_eq!(diag.after_area_filter, 1);
        assert!(!diag.candidates[0].kept);
    }

    #[test]
    fn median_aggregation() {
        let mut v = vec![3.0, 1.0, 2.0, 10.0];
        assert_eq!(aggregate(&mut v, RatioAggregation::Median), 2.5);
        assert_eq!(aggregate(&mut v, RatioAggregation::Mean), 4.0);
    }
}
