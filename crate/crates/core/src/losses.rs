//! Training objectives as pure array functions, with analytic gradients for
//! the dice and smooth-L1 terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_dims, BitMask, Grid};

/// Additive smoothing in both numerator and denominator of the dice
/// coefficient.
pub const DICE_EPS: f64 = 1e-6;

/// Hard negatives kept per positive pixel.
pub const DEFAULT_NEG_RATIO: usize = 3;

/// Weights of the complete-text, central-text and ratio terms; they must
/// sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub complete: f64,
    pub central: f64,
    pub ratio: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            complete: 0.5,
            central: 0.25,
            ratio: 0.25,
        }
    }
}

impl LossWeights {
    /// Strict constructor: non-negative and summing to one within 1e-9.
    pub fn new(complete: f64, central: f64, ratio: f64) -> Result<Self> {
        let w = Self {
            complete,
            central,
            ratio,
        };
        w.validate()?;
        Ok(w)
    }

    /// Rescales non-negative weights so they sum to one.
    pub fn normalized(complete: f64, central: f64, ratio: f64) -> Result<Self> {
        let sum = complete + central + ratio;
        if [complete, central, ratio].iter().any(|&v| !(v >= 0.0)) || !(sum > 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative with a positive sum, got ({complete}, {central}, {ratio})"
            )));
        }
        Self::new(complete / sum, central / sum, ratio / sum)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.complete, self.central, self.ratio];
        if parts.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!(
                "loss weights must be finite and >= 0, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "loss weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub complete: f64,
    pub central: f64,
    pub ratio: f64,
    pub total: f64,
    /// Pixels selected by hard example mining for the complete-text term.
    pub ohem_selected: usize,
}

fn masks_match(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    check_dims(a, b)
}

/// Smoothed dice coefficient `(2ΣRG + ε) / (ΣR² + ΣG² + ε)` over the
/// masked pixels. An empty mask gives exactly 1.
pub fn dice(pred: &Grid, target: &Grid, mask: &BitMask) -> Result<f64> {
    masks_match(pred.dims(), target.dims())?;
    masks_match(pred.dims(), mask.dims())?;
    let (num, den) = dice_terms(pred, target, mask);
    Ok(num / den)
}

fn dice_terms(pred: &Grid, target: &Grid, mask: &BitMask) -> (f64, f64) {
    let mut inter = 0.0;
    let mut sq = 0.0;
    for ((&r, &g), &m) in pred.values().iter().zip(target.values()).zip(mask.bits()) {
        if m {
            inter += r * g;
            sq += r * r + g * g;
        }
    }
    (2.0 * inter + DICE_EPS, sq + DICE_EPS)
}

/// ∂D/∂R per pixel, zero outside the mask.
pub fn dice_grad(pred: &Grid, target: &Grid, mask: &BitMask) -> Result<Grid> {
    masks_match(pred.dims(), target.dims())?;
    masks_match(pred.dims(), mask.dims())?;
    let (num, den) = dice_terms(pred, target, mask);
    let mut grad = Grid::new(pred.width(), pred.height());
    for (i, g) in grad.values_mut().iter_mut().enumerate() {
        if mask.bits()[i] {
            let (r, t) = (pred.values()[i], target.values()[i]);
            *g = (2.0 * t * den - 2.0 * r * num) / (den * den);
        }
    }
    Ok(grad)
}

/// Hard example mining mask: all eligible positives plus the
/// `neg_ratio · |positives|` eligible negatives with the highest score.
/// Ties go to the earlier pixel in raster order. Without positives the
/// whole training mask is returned.
pub fn ohem_mask(
    score: &Grid,
    target: &BitMask,
    train_mask: &BitMask,
    neg_ratio: usize,
) -> Result<BitMask> {
    masks_match(score.dims(), target.dims())?;
    masks_match(score.dims(), train_mask.dims())?;
    let positives = target.and(train_mask)?;
    let n_pos = positives.count();
    if n_pos == 0 {
        return Ok(train_mask.clone());
    }
    let mut negatives: Vec<usize> = (0..train_mask.bits().len())
        .filter(|&i| train_mask.bits()[i] && !target.bits()[i])
        .collect();
    let k = (neg_ratio.saturating_mul(n_pos)).min(negatives.len());
    let values = score.values();
    let order = |&a: &usize, &b: &usize| values[b].total_cmp(&values[a]).then(a.cmp(&b));
    if k < negatives.len() {
        negatives.select_nth_unstable_by(k, order);
    }
    let mut selected = positives;
    let (w, _) = score.dims();
    for &i in &negatives[..k] {
        selected.set(i % w, i / w, true);
    }
    Ok(selected)
}

/// Complete-text loss `1 − D(R_c, G_c)` restricted to the OHEM mask.
pub fn loss_complete(score: &Grid, target: &BitMask, train_mask: &BitMask) -> Result<f64> {
    Ok(loss_complete_with_count(score, target, train_mask, DEFAULT_NEG_RATIO)?.0)
}

fn loss_complete_with_count(
    score: &Grid,
    target: &BitMask,
    train_mask: &BitMask,
    neg_ratio: usize,
) -> Result<(f64, usize)> {
    let m = ohem_mask(score, target, train_mask, neg_ratio)?;
    let d = dice(score, &Grid::from_mask(target), &m)?;
    Ok((1.0 - d, m.count()))
}

/// Central-text loss over `W = (R_c ≥ 0.5) ∧ train_mask`; 0 when W is empty.
pub fn loss_central(
    central_score: &Grid,
    central_target: &BitMask,
    full_score: &Grid,
    train_mask: &BitMask,
) -> Result<f64> {
    masks_match(central_score.dims(), central_target.dims())?;
    masks_match(central_score.dims(), full_score.dims())?;
    masks_match(central_score.dims(), train_mask.dims())?;
    let w = full_score.threshold(0.5).and(train_mask)?;
    if w.is_empty() {
        return Ok(0.0);
    }
    Ok(1.0 - dice(central_score, &Grid::from_mask(central_target), &w)?)
}

pub fn smooth_l1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

pub fn smooth_l1_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioReduction {
    #[default]
    Sum,
    /// Divided by the number of supervised pixels.
    Mean,
}

/// Smooth-L1 ratio regression summed over ground-truth central pixels
/// inside the training mask.
pub fn loss_ratio(pred: &Grid, target: &Grid, central: &BitMask, train_mask: &BitMask) -> Result<f64> {
    loss_ratio_with(pred, target, central, train_mask, RatioReduction::Sum)
}

pub fn loss_ratio_with(
    pred: &Grid,
    target: &Grid,
    central: &BitMask,
    train_mask: &BitMask,
    reduction: RatioReduction,
) -> Result<f64> {
    masks_match(pred.dims(), target.dims())?;
    masks_match(pred.dims(), central.dims())?;
    masks_match(pred.dims(), train_mask.dims())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..pred.values().len() {
        if central.bits()[i] && train_mask.bits()[i] {
            sum += smooth_l1(pred.values()[i] - target.values()[i]);
            n += 1;
        }
    }
    Ok(match (reduction, n) {
        (_, 0) => 0.0,
        (RatioReduction::Sum, _) => sum,
        (RatioReduction::Mean, n) => sum / n as f64,
    })
}

/// Per-pixel gradient of [`loss_ratio_with`] with respect to the prediction.
pub fn loss_ratio_grad(
    pred: &Grid,
    target: &Grid,
    central: &BitMask,
    train_mask: &BitMask,
    reduction: RatioReduction,
) -> Result<Grid> {
    masks_match(pred.dims(), target.dims())?;
    masks_match(pred.dims(), central.dims())?;
    masks_match(pred.dims(), train_mask.dims())?;
    let active = central.and(train_mask)?;
    let scale = match reduction {
        RatioReduction::Sum => 1.0,
        RatioReduction::Mean => 1.0 / active.count().max(1) as f64,
    };
    let mut grad = Grid::new(pred.width(), pred.height());
    for (i, g) in grad.values_mut().iter_mut().enumerate() {
        if active.bits()[i] {
            *g = scale * smooth_l1_grad(pred.values()[i] - target.values()[i]);
        }
    }
    Ok(grad)
}

/// Weighted sum of the three terms.
pub fn total_loss(
    weights: &LossWeights,
    complete: f64,
    central: f64,
    ratio: f64,
    ohem_selected: usize,
) -> Result<LossReport> {
    weights.validate()?;
    Ok(LossReport {
        complete,
        central,
        ratio,
        total: weights.complete * complete + weights.central * central + weights.ratio * ratio,
        ohem_selected,
    })
}

/// Network-shaped predictions: full-text score, central-text score and the
/// per-pixel expansion distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub full: Grid,
    pub central: Grid,
    pub ratio: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub weights: LossWeights,
    pub neg_ratio: usize,
    pub ratio_reduction: RatioReduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            neg_ratio: DEFAULT_NEG_RATIO,
            ratio_reduction: RatioReduction::Sum,
        }
    }
}

/// All three terms and their weighted total for one image.
pub fn compute_losses(
    pred: &Predictions,
    labels: &crate::labels::LabelSet,
    config: &LossConfig,
) -> Result<LossReport> {
    let (lc, selected) = loss_complete_with_count(
        &pred.full,
        &labels.full_mask,
        &labels.train_mask,
        config.neg_ratio,
    )?;
    let ls = loss_central(
        &pred.central,
        &labels.central_mask,
        &pred.full,
        &labels.train_mask,
    )?;
    let ld = loss_ratio_with(
        &pred.ratio,
        &labels.ratio_map,
        &labels.central_mask,
        &labels.train_mask,
        config.ratio_reduction,
    )?;
    total_loss(&config.weights, lc, ls, ld, selected)
}
