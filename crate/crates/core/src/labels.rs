//! Ground-truth generation: full mask, central mask, ratio map and training
//! mask, with per-instance shrink ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{offset_distance_for_ratio, shrink_polygon, Polygon};
use crate::raster::{rasterize_polygon, BitMask, Grid};

/// Candidate shrink ratios used when none are configured.
pub const DEFAULT_RATIOS: [f64; 4] = [0.3, 0.4, 0.5, 0.6];

/// One annotated text region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextInstance {
    pub polygon: Polygon,
    /// Don't-care region: excluded from supervision and evaluation.
    pub ignore: bool,
    pub transcription: Option<String>,
}

impl TextInstance {
    pub fn new(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: false,
            transcription: None,
        }
    }

    pub fn ignored(polygon: Polygon) -> Self {
        Self {
            polygon,
            ignore: true,
            transcription: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMode {
    Fixed(f64),
    UniformSet(Vec<f64>),
}

/// Deterministic per-instance, per-iteration choice of shrink ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSampler {
    mode: RatioMode,
    seed: u64,
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "shrink ratio must lie in (0, 1], got {r}"
        )))
    }
}

impl RatioSampler {
    pub fn fixed(ratio: f64) -> Result<Self> {
        check_ratio(ratio)?;
        Ok(Self {
            mode: RatioMode::Fixed(ratio),
            seed: 0,
        })
    }

    pub fn uniform(ratios: Vec<f64>, seed: u64) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::Config("ratio set is empty".into()));
        }
        for &r in &ratios {
            check_ratio(r)?;
        }
        Ok(Self {
            mode: RatioMode::UniformSet(ratios),
            seed,
        })
    }

    /// Same mode with a different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            mode: self.mode.clone(),
            seed,
        }
    }

    pub fn mode(&self) -> &RatioMode {
        &self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The ratio for `instance` at training `iteration`. Varies with both
    /// indices and is a pure function of `(seed, instance, iteration)`.
    pub fn sample(&self, instance: usize, iteration: u64) -> f64 {
        match &self.mode {
            RatioMode::Fixed(r) => *r,
            RatioMode::UniformSet(set) => {
                let key = splitmix64(
                    splitmix64(self.seed ^ 0x243f_6a88_85a3_08d3)
                        ^ splitmix64(instance as u64).rotate_left(21)
                        ^ splitmix64(iteration ^ 0x1319_8a2e_0370_7344).rotate_left(42),
                );
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                set[rng.random_range(0..set.len())]
            }
        }
    }
}

impl Default for RatioSampler {
    fn default() -> Self {
        Self::uniform(DEFAULT_RATIOS.to_vec(), 0).expect("default ratios are valid")
    }
}

/// Free-function form of [`RatioSampler::sample`].
pub fn sample_ratio(sampler: &RatioSampler, instance: usize, iteration: u64) -> f64 {
    sampler.sample(instance, iteration)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    /// Shrunk region rasterized to at least one pixel.
    Central,
    /// Shrinking by `distance` left nothing.
    Collapsed,
    /// Shrunk polygon exists but covers no pixel center.
    Subpixel,
    /// Annotation polygon unusable (too few vertices or zero area).
    Degenerate,
}

/// What label generation did with one non-ignore instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub ratio: f64,
    pub distance: f64,
    pub status: InstanceStatus,
    pub central_pixels: usize,
    pub central_polygon: Option<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub full_mask: BitMask,
    pub central_mask: BitMask,
    /// Expansion distance in pixels on central pixels, 0 elsewhere.
    pub ratio_map: Grid,
    /// 1 where a pixel participates in the losses.
    pub train_mask: BitMask,
    pub per_instance: Vec<InstanceRecord>,
    /// Central pixels claimed by more than one instance; the later one wins.
    pub overlap_pixels: usize,
}

/// Builds all supervision targets for one image.
///
/// Ignore instances only clear the training mask. Every other instance is
/// rasterized into the full mask, shrunk by the distance derived from its
/// sampled ratio and, if anything survives, rasterized into the central
/// mask with that distance written into the ratio map.
pub fn generate_labels(
    instances: &[TextInstance],
    width: usize,
    height: usize,
    sampler: &RatioSampler,
    iteration: u64,
) -> Result<LabelSet> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    let mut full_mask = BitMask::new(width, height);
    let mut central_mask = BitMask::new(width, height);
    let mut ratio_map = Grid::new(width, height);
    let mut train_mask = BitMask::filled(width, height, true);
    let mut per_instance = Vec::new();
    let mut overlap_pixels = 0usize;

    for (index, inst) in instances.iter().enumerate() {
        let poly = &inst.polygon;
        if inst.ignore {
            if poly.len() >= 3 {
                for (x, y) in rasterize_polygon(poly, width, height).iter_set() {
                    train_mask.set(x, y, false);
                }
            }
            continue;
        }
        let ratio = sampler.sample(index, iteration);
        let usable = poly.len() >= 3 && poly.area() > 0.0;
        if !usable {
            log::warn!("instance {index}: degenerate polygon skipped");
            per_instance.push(InstanceRecord {
                index,
                ratio,
                distance: 0.0,
                status: InstanceStatus::Degenerate,
                central_pixels: 0,
                central_polygon: None,
            });
            continue;
        }
        let full = rasterize_polygon(poly, width, height);
        for (x, y) in full.iter_set() {
            full_mask.set(x, y, true);
        }
        let distance = offset_distance_for_ratio(poly, ratio)?;
        let shrunk = shrink_polygon(poly, distance)?;
        let mut record = InstanceRecord {
            index,
            ratio,
            distance,
            status: InstanceStatus::Collapsed,
            central_pixels: 0,
            central_polygon: None,
        };
        if let Some(central) = shrunk {
            let pixels = rasterize_polygon(&central, width, height);
            for (x, y) in pixels.iter_set() {
                if central_mask.get(x, y) {
                    overlap_pixels += 1;
                }
                central_mask.set(x, y, true);
                ratio_map.set(x, y, distance);
            }
            record.central_pixels = pixels.count();
            record.status = if record.central_pixels > 0 {
                InstanceStatus::Central
            } else {
                InstanceStatus::Subpixel
            };
            record.central_polygon = Some(central);
        }
        per_instance.push(record);
    }
    if overlap_pixels > 0 {
        log::debug!("{overlap_pixels} central pixels shared between instances");
    }

    Ok(LabelSet {
        full_mask,
        central_mask,
        ratio_map,
        train_mask,
        per_instance,
        overlap_pixels,
    })
}
