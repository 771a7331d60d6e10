//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 property-suite failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::checks::run_geometry_checks;
use crate::error::{Error, Result};
use crate::eval::{evaluate_corpus, DontCareRule, EvalConfig, EvalReport};
use crate::formats::{
    annotation_to_json, detections_to_json, list_files, load_annotation_dir, load_detections,
    read_map, write_bytes, write_grid, write_mask, AnnotationFile, DetectionFile, SourceFormat,
};
use crate::inference::{extract_detections, PostprocessConfig};
use crate::labels::{generate_labels, RatioSampler, DEFAULT_RATIOS};
use crate::pipeline::{run_e2e, E2eOptions};
use crate::synth::{generate_corpus, NoiseConfig, SceneKind};

// print!/println! that tolerate a closed stdout, e.g. when piped into
// `head`.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! emit {
    ($($t:tt)*) => {{
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PROPERTY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "textregion", version, about = "Central text region labels, expansion post-processing and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write full/central/train masks, ratio maps and instance records.
    GenLabels(GenLabelsArgs),
    /// Turn three prediction maps into detection polygons.
    Infer(InferArgs),
    /// Score a directory of detections against annotations.
    Eval(EvalArgs),
    /// Labels, synthetic predictions, inference and evaluation in one pass.
    E2eSynth(E2eArgs),
    /// Run the seeded geometry property suite.
    CheckGeometry(CheckArgs),
    /// Write a generated annotation corpus.
    SynthCorpus(CorpusArgs),
}

#[derive(Debug, Clone, Copy)]
struct Size {
    width: usize,
    height: usize,
}

fn parse_size(s: &str) -> std::result::Result<Size, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let width: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let height: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if width == 0 || height == 0 {
        return Err(format!("size must be positive, got {s:?}"));
    }
    Ok(Size { width, height })
}

fn parse_ratio_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad ratio {t:?}")))
        .collect()
}

#[derive(Debug, Args)]
struct RatioArgs {
    /// Comma-separated shrink ratios sampled per instance.
    #[arg(long, value_parser = parse_ratio_list, conflicts_with = "fixed")]
    ratios: Option<Vec<f64>>,
    /// One shrink ratio for every instance.
    #[arg(long)]
    fixed: Option<f64>,
}

impl RatioArgs {
    fn sampler(&self, seed: u64) -> Result<RatioSampler> {
        match (&self.ratios, self.fixed) {
            (_, Some(r)) => RatioSampler::fixed(r),
            (Some(set), None) => RatioSampler::uniform(set.clone(), seed),
            (None, None) => RatioSampler::uniform(DEFAULT_RATIOS.to_vec(), seed),
        }
    }
}

#[derive(Debug, Args)]
struct GenLabelsArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    ratio: RatioArgs,
    #[arg(long, value_parser = parse_size, default_value = "256x256")]
    size: Size,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    iteration: u64,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Full-text probability map (F32G or PGM).
    #[arg(long)]
    full: PathBuf,
    /// Central-text probability map (F32G or PGM).
    #[arg(long)]
    central: PathBuf,
    /// Expansion distance map (F32G).
    #[arg(long)]
    ratio: PathBuf,
    /// Post-processing config (JSON); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Fit minimum-area rectangles instead of contours.
    #[arg(long)]
    quad: bool,
    /// Image id written to the output; defaults to the output file stem.
    #[arg(long)]
    image_id: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DontCareArg {
    Iou,
    Iod,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Overlap rule against don't-care regions.
    #[arg(long, value_enum, default_value = "iou")]
    dont_care: DontCareArg,
}

#[derive(Debug, Args)]
struct E2eArgs {
    #[arg(long)]
    annotations: PathBuf,
    /// Gaussian noise on probability maps.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Gaussian noise on the ratio map, in pixels.
    #[arg(long, default_value_t = 0.0)]
    ratio_noise: f64,
    /// Rounds of boundary-pixel toggling.
    #[arg(long, default_value_t = 0)]
    jitter: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    ratio: RatioArgs,
    #[arg(long, value_parser = parse_size, default_value = "256x256")]
    size: Size,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    quad: bool,
    /// Also write one detections file per image here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Mixed,
    Separation,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long, value_enum, default_value = "mixed")]
    kind: KindArg,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_parser = parse_size, default_value = "256x256")]
    size: Size,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_config(path: Option<&Path>, quad: bool) -> Result<PostprocessConfig> {
    let mut cfg = match path {
        None => PostprocessConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
    };
    if quad {
        cfg.quad_mode = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ReportOut<'a> {
    precision: f64,
    recall: f64,
    f_measure: f64,
    true_positives: usize,
    num_detections: usize,
    num_gt: usize,
    iou_threshold: f64,
    images: &'a [String],
    matches: Vec<MatchOut<'a>>,
}

#[derive(Serialize)]
struct MatchOut<'a> {
    image: &'a str,
    detection: usize,
    gt: usize,
    iou: f64,
}

fn report_json(report: &EvalReport, images: &[String], iou_threshold: f64) -> String {
    pretty(&ReportOut {
        precision: report.precision,
        recall: report.recall,
        f_measure: report.f_measure,
        true_positives: report.true_positives,
        num_detections: report.num_detections,
        num_gt: report.num_gt,
        iou_threshold,
        images,
        matches: report
            .matches
            .iter()
            .map(|m| MatchOut {
                image: &images[m.image],
                detection: m.detection,
                gt: m.gt,
                iou: m.iou,
            })
            .collect(),
    })
}

fn gen_labels(args: &GenLabelsArgs) -> Result<()> {
    let corpus = load_annotation_dir(&args.annotations)?;
    create_dir(&args.out)?;
    let sampler = args.ratio.sampler(args.seed)?;
    for file in &corpus {
        let labels = generate_labels(
            &file.instances,
            args.size.width,
            args.size.height,
            &sampler,
            args.iteration,
        )?;
        let base = |suffix: &str| args.out.join(format!("{}_{suffix}", file.image_id));
        write_mask(&base("full.pgm"), &labels.full_mask)?;
        write_mask(&base("central.pgm"), &labels.central_mask)?;
        write_grid(&base("ratio.f32g"), &labels.ratio_map)?;
        write_mask(&base("train.pgm"), &labels.train_mask)?;

        let instances: Vec<Value> = file
            .instances
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut m = Map::new();
                let pts: Vec<Value> = inst.polygon.vertices().iter().map(|p| json!([p.x, p.y])).collect();
                m.insert("points".into(), Value::Array(pts));
                m.insert("ignore".into(), Value::Bool(inst.ignore));
                m.insert("transcription".into(), json!(inst.transcription));
                let rec = labels.per_instance.iter().find(|r| r.index == i);
                m.insert("ratio".into(), json!(rec.map(|r| r.ratio)));
                m.insert("distance".into(), json!(rec.map(|r| r.distance)));
                m.insert("status".into(), json!(rec.map(|r| r.status)));
                m.insert("central_pixels".into(), json!(rec.map(|r| r.central_pixels)));
                let central = rec
                    .and_then(|r| r.central_polygon.as_ref())
                    .map(|p| p.vertices().iter().map(|v| json!([v.x, v.y])).collect::<Vec<_>>());
                m.insert("central_points".into(), json!(central));
                Value::Object(m)
            })
            .collect();
        let mut root = Map::new();
        root.insert("image_id".into(), json!(file.image_id));
        root.insert("width".into(), json!(args.size.width));
        root.insert("height".into(), json!(args.size.height));
        root.insert("overlap_pixels".into(), json!(labels.overlap_pixels));
        root.insert("instances".into(), Value::Array(instances));
        write_bytes(&base("instances.json"), pretty(&Value::Object(root)).as_bytes())?;
        log::info!("{}: {} instances", file.image_id, file.instances.len());
    }
    say!("wrote labels for {} images to {}", corpus.len(), args.out.display());
    Ok(())
}

fn infer(args: &InferArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), args.quad)?;
    let full = read_map(&args.full)?;
    let central = read_map(&args.central)?;
    let ratio = read_map(&args.ratio)?;
    let detections = extract_detections(&full, &central, &ratio, &cfg)?;
    let image_id = args.image_id.clone().unwrap_or_else(|| {
        args.out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let n = detections.len();
    write_bytes(
        &args.out,
        detections_to_json(&DetectionFile {
            image_id,
            detections,
        })
        .as_bytes(),
    )?;
    say!("{n} detections written to {}", args.out.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = EvalConfig {
        iou_threshold: args.iou,
        dont_care: match args.dont_care {
            DontCareArg::Iou => DontCareRule::Iou,
            DontCareArg::Iod => DontCareRule::IntersectionOverDetection,
        },
        ..Default::default()
    };
    let gts = load_annotation_dir(&args.annotations)?;
    let mut dets: Vec<DetectionFile> = list_files(&args.detections, &["json"])?
        .iter()
        .map(|p| load_detections(p))
        .collect::<Result<_>>()?;
    dets.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    for d in &dets {
        if !gts.iter().any(|g| g.image_id == d.image_id) {
            return Err(Error::Config(format!(
                "{}: detections for {:?} have no annotation",
                args.detections.display(),
                d.image_id
            )));
        }
    }
    let pairs: Vec<(Vec<_>, Vec<_>)> = gts
        .iter()
        .map(|g| {
            let found = dets.iter().find(|d| d.image_id == g.image_id);
            if found.is_none() {
                log::warn!("no detections for {}", g.image_id);
            }
            (
                found.map(|d| d.detections.clone()).unwrap_or_default(),
                g.instances.clone(),
            )
        })
        .collect();
    let report = evaluate_corpus(&pairs, &cfg)?;
    let ids: Vec<String> = gts.iter().map(|g| g.image_id.clone()).collect();
    emit!("{}", report_json(&report, &ids, args.iou));
    Ok(())
}

fn e2e(args: &E2eArgs) -> Result<()> {
    let corpus = load_annotation_dir(&args.annotations)?;
    let opts = E2eOptions {
        width: args.size.width,
        height: args.size.height,
        sampler: args.ratio.sampler(args.seed)?,
        iteration: 0,
        noise: NoiseConfig {
            prob_noise_sigma: args.noise_sigma,
            ratio_noise_sigma: args.ratio_noise,
            boundary_jitter: args.jitter,
            seed: args.seed,
        },
        postprocess: load_config(args.config.as_deref(), args.quad)?,
        eval: EvalConfig::with_threshold(args.iou),
    };
    let run = run_e2e(&corpus, &opts)?;
    if let Some(out) = &args.out {
        create_dir(out)?;
        for (id, dets) in run.image_ids.iter().zip(&run.detections) {
            let file = DetectionFile {
                image_id: id.clone(),
                detections: dets.clone(),
            };
            write_bytes(&out.join(format!("{id}.json")), detections_to_json(&file).as_bytes())?;
        }
    }
    emit!("{}", report_json(&run.report, &run.image_ids, args.iou));
    Ok(())
}

fn check_geometry(args: &CheckArgs) -> bool {
    let report = run_geometry_checks(args.trials, args.seed);
    for c in &report.checks {
        let verdict = if c.failed == 0 { "PASS" } else { "FAIL" };
        say!("{verdict} {}: {} passed, {} failed", c.name, c.passed, c.failed);
        if let Some(f) = &c.first_failure {
            say!("  first failure: {f}");
        }
    }
    report.all_passed()
}

fn synth_corpus(args: &CorpusArgs) -> Result<()> {
    let kind = match args.kind {
        KindArg::Mixed => SceneKind::Mixed,
        KindArg::Separation => SceneKind::Separation,
    };
    create_dir(&args.out)?;
    let corpus = generate_corpus(kind, args.count, args.size.width, args.size.height, args.seed);
    for (id, instances) in corpus {
        let path = args.out.join(format!("{id}.json"));
        let file = AnnotationFile {
            image_id: id,
            instances,
            source: SourceFormat::Canonical,
        };
        write_bytes(&path, annotation_to_json(&file).as_bytes())?;
    }
    say!("wrote {} scenes to {}", args.count, args.out.display());
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::GenLabels(a) => gen_labels(a),
        Command::Infer(a) => infer(a),
        Command::Eval(a) => eval(a),
        Command::E2eSynth(a) => e2e(a),
        Command::SynthCorpus(a) => synth_corpus(a),
        Command::CheckGeometry(a) => {
            return if check_geometry(a) {
                EXIT_OK
            } else {
                EXIT_PROPERTY
            }
        }
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
