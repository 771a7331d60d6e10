//! IoU matching and precision / recall / F-measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::polygon_iou;
use crate::inference::Detection;
use crate::labels::TextInstance;
use crate::raster::overlap_stats;

/// How a detection is compared against a don't-care annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DontCareRule {
    #[default]
    Iou,
    /// Intersection divided by the detection's own area.
    IntersectionOverDetection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub dont_care: DontCareRule,
    /// Raster samples per unit length used for polygon overlaps.
    pub resolution: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            dont_care: DontCareRule::Iou,
            resolution: 4.0,
        }
    }
}

impl EvalConfig {
    pub fn with_threshold(iou_threshold: f64) -> Self {
        Self {
            iou_threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold must lie in (0, 1], got {}",
                self.iou_threshold
            )));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    /// Image position within a corpus; 0 for single-image evaluation.
    pub image: usize,
    pub detection: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub true_positives: usize,
    /// Detections left after don't-care removal.
    pub num_detections: usize,
    /// Annotations not marked ignore.
    pub num_gt: usize,
    pub matches: Vec<Match>,
}

impl EvalReport {
    fn from_counts(tp: usize, dets: usize, gts: usize, matches: Vec<Match>) -> Self {
        let precision = if dets == 0 { 1.0 } else { tp as f64 / dets as f64 };
        let recall = if gts == 0 { 1.0 } else { tp as f64 / gts as f64 };
        Self {
            precision,
            recall,
            f_measure: f_measure(precision, recall),
            true_positives: tp,
            num_detections: dets,
            num_gt: gts,
            matches,
        }
    }
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Single-image evaluation with the default protocol at `iou_threshold`.
pub fn evaluate(detections: &[Detection], gts: &[TextInstance], iou_threshold: f64) -> EvalReport {
    let cfg = EvalConfig::with_threshold(iou_threshold);
    let (matches, dets, gt) = match_image(detections, gts, &cfg, 0);
    EvalReport::from_counts(matches.len(), dets, gt, matches)
}

pub fn evaluate_with(
    detections: &[Detection],
    gts: &[TextInstance],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let (matches, dets, gt) = match_image(detections, gts, cfg, 0);
    Ok(EvalReport::from_counts(matches.len(), dets, gt, matches))
}

/// Pools counts over images before computing the rates.
pub fn evaluate_corpus<D, G>(images: &[(D, G)], cfg: &EvalConfig) -> Result<EvalReport>
where
    D: AsRef<[Detection]>,
    G: AsRef<[TextInstance]>,
{
    cfg.validate()?;
    let mut all = Vec::new();
    let (mut dets, mut gts) = (0, 0);
    for (image, (d, g)) in images.iter().enumerate() {
        let (m, nd, ng) = match_image(d.as_ref(), g.as_ref(), cfg, image);
        all.extend(m);
        dets += nd;
        gts += ng;
    }
    Ok(EvalReport::from_counts(all.len(), dets, gts, all))
}

fn match_image(
    detections: &[Detection],
    gts: &[TextInstance],
    cfg: &EvalConfig,
    image: usize,
) -> (Vec<Match>, usize, usize) {
    let care: Vec<usize> = (0..gts.len()).filter(|&g| !gts[g].ignore).collect();
    let ignored: Vec<usize> = (0..gts.len()).filter(|&g| gts[g].ignore).collect();

    let kept: Vec<usize> = (0..detections.len())
        .filter(|&d| {
            !ignored.iter().any(|&g| {
                let det = &detections[d].polygon;
                let gt = &gts[g].polygon;
                let overlap = match cfg.dont_care {
                    DontCareRule::Iou => polygon_iou(det, gt, cfg.resolution),
                    DontCareRule::IntersectionOverDetection => {
                        overlap_stats(det, gt, cfg.resolution).intersection_over_a()
                    }
                };
                overlap >= cfg.iou_threshold
            })
        })
        .collect();

    let mut pairs: Vec<Match> = Vec::new();
    for &d in &kept {
        for &g in &care {
            let iou = polygon_iou(&detections[d].polygon, &gts[g].polygon, cfg.resolution);
            if iou >= cfg.iou_threshold {
                pairs.push(Match {
                    image,
                    detection: d,
                    gt: g,
                    iou,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.detection.cmp(&b.detection))
            .then(a.gt.cmp(&b.gt))
    });
    let mut det_used = vec![false; detections.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut matches = Vec::new();
    for p in pairs {
        if !det_used[p.detection] && !gt_used[p.gt] {
            det_used[p.detection] = true;
            gt_used[p.gt] = true;
            matches.push(p);
        }
    }
    matches.sort_by_key(|m| m.detection);
    (matches, kept.len(), care.len())
}
