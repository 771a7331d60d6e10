//! Corpus-level runs chaining labels, synthetic predictions, inference and
//! evaluation.

use serde::Serialize;

use crate::error::Result;
use crate::eval::{evaluate_corpus, EvalConfig, EvalReport};
use crate::formats::AnnotationFile;
use crate::inference::{extract_detections, Detection, PostprocessConfig};
use crate::labels::{generate_labels, splitmix64, RatioSampler};
use crate::synth::{synth_predictions, NoiseConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct E2eOptions {
    pub width: usize,
    pub height: usize,
    pub sampler: RatioSampler,
    pub iteration: u64,
    /// `seed` here is the corpus seed; each image derives its own.
    pub noise: NoiseConfig,
    pub postprocess: PostprocessConfig,
    pub eval: EvalConfig,
}

impl Default for E2eOptions {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            sampler: RatioSampler::default(),
            iteration: 0,
            noise: NoiseConfig::noiseless(),
            postprocess: PostprocessConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Seed for image `index` of a corpus run with `seed`.
pub fn image_seed(seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct E2eRun {
    pub image_ids: Vec<String>,
    #[serde(skip)]
    pub detections: Vec<Vec<Detection>>,
    pub report: EvalReport,
}

/// Detections for one annotated image from noise-corrupted ground truth.
pub fn synth_detect(
    file: &AnnotationFile,
    index: usize,
    opts: &E2eOptions,
) -> Result<Vec<Detection>> {
    let seed = image_seed(opts.noise.seed, index);
    let sampler = opts.sampler.reseeded(splitmix64(seed ^ opts.sampler.seed()));
    let labels = generate_labels(&file.instances, opts.width, opts.height, &sampler, opts.iteration)?;
    let noise = NoiseConfig { seed, ..opts.noise };
    let maps = synth_predictions(&labels, &noise)?;
    extract_detections(&maps.full, &maps.central, &maps.ratio, &opts.postprocess)
}

pub fn run_e2e(corpus: &[AnnotationFile], opts: &E2eOptions) -> Result<E2eRun> {
    let mut detections = Vec::with_capacity(corpus.len());
    for (i, file) in corpus.iter().enumerate() {
        detections.push(synth_detect(file, i, opts)?);
    }
    let pairs: Vec<(&[Detection], &[crate::labels::TextInstance])> = detections
        .iter()
        .zip(corpus)
        .map(|(d, f)| (d.as_slice(), f.instances.as_slice()))
        .collect();
    let report = evaluate_corpus(&pairs, &opts.eval)?;
    Ok(E2eRun {
        image_ids: corpus.iter().map(|f| f.image_id.clone()).collect(),
        detections,
        report,
    })
}
