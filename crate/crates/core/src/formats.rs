//! On-disk formats: annotation files (canonical JSON and ICDAR 2015 text),
//! detection files, F32G grids and binary PGM masks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::inference::Detection;
use crate::labels::TextInstance;
use crate::raster::{BitMask, Grid};

pub const GRID_MAGIC: &[u8; 4] = b"F32G";
const GRID_HEADER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Canonical,
    Icdar15,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFile {
    pub image_id: String,
    pub instances: Vec<TextInstance>,
    pub source: SourceFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFile {
    pub image_id: String,
    pub detections: Vec<Detection>,
}

/// Marks a don't-care region in ICDAR-style annotations.
pub const DONT_CARE: &str = "###";

/// Parses ICDAR 2015 ground truth: one `x1,y1,...,x4,y4,transcription` per
/// line. Commas inside the transcription are kept.
pub fn parse_icdar15(text: &str, image_id: &str) -> Result<AnnotationFile> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut instances = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let loc = || format!("line {line_no}");
        let fields: Vec<&str> = line.splitn(9, ',').collect();
        if fields.len() < 8 {
            return Err(Error::parse(
                loc(),
                format!("expected 8 coordinates, found {} fields", fields.len()),
            ));
        }
        let mut coords = [0.0f64; 8];
        for (k, f) in fields[..8].iter().enumerate() {
            coords[k] = f.trim().parse::<f64>().map_err(|_| {
                Error::parse(loc(), format!("coordinate {} is not a number: {f:?}", k + 1))
            })?;
        }
        let points: Vec<Point> = coords.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
        let polygon = Polygon::new(points).map_err(|e| Error::parse(loc(), e.to_string()))?;
        let transcription = fields.get(8).map(|t| t.trim().to_string());
        let ignore = transcription.as_deref() == Some(DONT_CARE);
        instances.push(TextInstance {
            polygon,
            ignore,
            transcription,
        });
    }
    Ok(AnnotationFile {
        image_id: image_id.to_string(),
        instances,
        source: SourceFormat::Icdar15,
    })
}

fn json_error(path: &str, msg: impl Into<String>) -> Error {
    Error::parse(path.to_string(), msg)
}

fn parse_points(v: &Value, path: &str, min: usize) -> Result<Polygon> {
    let arr = v
        .as_array()
        .ok_or_else(|| json_error(path, "expected an array of [x, y] pairs"))?;
    if arr.len() < min {
        return Err(json_error(
            path,
            format!("need at least {min} points, found {}", arr.len()),
        ));
    }
    let mut pts = Vec::with_capacity(arr.len());
    for (i, p) in arr.iter().enumerate() {
        let here = format!("{path}[{i}]");
        let pair = p
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| json_error(&here, "expected [x, y]"))?;
        let x = pair[0]
            .as_f64()
            .ok_or_else(|| json_error(&format!("{here}[0]"), "expected a number"))?;
        let y = pair[1]
            .as_f64()
            .ok_or_else(|| json_error(&format!("{here}[1]"), "expected a number"))?;
        pts.push(Point::new(x, y));
    }
    Polygon::new(pts).map_err(|e| json_error(path, e.to_string()))
}

fn parse_root(text: &str) -> Result<Map<String, Value>> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {}", e.line()), e.to_string()))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(json_error("$", "expected an object")),
    }
}

fn parse_image_id(root: &Map<String, Value>) -> Result<String> {
    match root.get("image_id") {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(json_error("$.image_id", "expected a string")),
    }
}

fn parse_instances(list: &Value) -> Result<Vec<TextInstance>> {
    let items = list
        .as_array()
        .ok_or_else(|| json_error("$.instances", "expected an array"))?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("$.instances[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| json_error(&path, "expected an object"))?;
        let points = obj
            .get("points")
            .ok_or_else(|| json_error(&path, "missing \"points\""))?;
        let polygon = parse_points(points, &format!("{path}.points"), 3)?;
        let ignore = match obj.get("ignore") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(json_error(&format!("{path}.ignore"), "expected a boolean")),
        };
        let transcription = match obj.get("transcription") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                return Err(json_error(
                    &format!("{path}.transcription"),
                    "expected a string or null",
                ))
            }
        };
        out.push(TextInstance {
            polygon,
            ignore,
            transcription,
        });
    }
    Ok(out)
}

/// Parses the canonical annotation schema:
/// `{"image_id": str, "instances": [{"points": [[x, y], ...], "ignore": bool,
/// "transcription": str | null}]}`. `image_id` may be omitted.
pub fn parse_polygon_json(text: &str) -> Result<AnnotationFile> {
    let root = parse_root(text)?;
    let image_id = parse_image_id(&root)?;
    let list = root
        .get("instances")
        .ok_or_else(|| json_error("$", "missing \"instances\""))?;
    Ok(AnnotationFile {
        image_id,
        instances: parse_instances(list)?,
        source: SourceFormat::Canonical,
    })
}

fn points_value(poly: &Polygon) -> Value {
    Value::Array(
        poly.vertices()
            .iter()
            .map(|p| json!([p.x, p.y]))
            .collect(),
    )
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Canonical JSON text. Keys keep a fixed order.
pub fn annotation_to_json(file: &AnnotationFile) -> String {
    let instances: Vec<Value> = file
        .instances
        .iter()
        .map(|inst| {
            let mut m = Map::new();
            m.insert("points".into(), points_value(&inst.polygon));
            m.insert("ignore".into(), Value::Bool(inst.ignore));
            m.insert(
                "transcription".into(),
                inst.transcription
                    .as_ref()
                    .map_or(Value::Null, |t| Value::String(t.clone())),
            );
            Value::Object(m)
        })
        .collect();
    let mut root = Map::new();
    root.insert("image_id".into(), Value::String(file.image_id.clone()));
    root.insert("instances".into(), Value::Array(instances));
    to_pretty(&Value::Object(root))
}

pub fn detections_to_json(file: &DetectionFile) -> String {
    let dets: Vec<Value> = file
        .detections
        .iter()
        .map(|d| {
            let mut m = Map::new();
            m.insert("points".into(), points_value(&d.polygon));
            m.insert("score".into(), json!(d.score));
            Value::Object(m)
        })
        .collect();
    let mut root = Map::new();
    root.insert("image_id".into(), Value::String(file.image_id.clone()));
    root.insert("detections".into(), Value::Array(dets));
    to_pretty(&Value::Object(root))
}

/// Parses a detections file. Annotation files are accepted too: every
/// instance that is not ignored becomes a detection with score 1.
pub fn parse_detections_json(text: &str) -> Result<DetectionFile> {
    let root = parse_root(text)?;
    let image_id = parse_image_id(&root)?;
    if let Some(list) = root.get("detections") {
        let items = list
            .as_array()
            .ok_or_else(|| json_error("$.detections", "expected an array"))?;
        let mut detections = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let path = format!("$.detections[{i}]");
            let obj = item
                .as_object()
                .ok_or_else(|| json_error(&path, "expected an object"))?;
            let points = obj
                .get("points")
                .ok_or_else(|| json_error(&path, "missing \"points\""))?;
            let polygon = parse_points(points, &format!("{path}.points"), 3)?;
            let score = match obj.get("score") {
                None => 1.0,
                Some(v) => v
                    .as_f64()
                    .filter(|s| (0.0..=1.0).contains(s))
                    .ok_or_else(|| json_error(&format!("{path}.score"), "expected a number in [0, 1]"))?,
            };
            detections.push(Detection { polygon, score });
        }
        return Ok(DetectionFile {
            image_id,
            detections,
        });
    }
    if let Some(list) = root.get("instances") {
        let detections = parse_instances(list)?
            .into_iter()
            .filter(|i| !i.ignore)
            .map(|i| Detection {
                polygon: i.polygon,
                score: 1.0,
            })
            .collect();
        return Ok(DetectionFile {
            image_id,
            detections,
        });
    }
    Err(json_error("$", "missing \"detections\""))
}

/// F32G bytes: magic, u32 LE width and height, then row-major f32 LE values.
pub fn encode_grid(grid: &Grid) -> Vec<u8> {
    let (w, h) = grid.dims();
    let mut out = Vec::with_capacity(GRID_HEADER + 4 * w * h);
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for &v in grid.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<Grid> {
    if bytes.len() < GRID_HEADER {
        return Err(Error::Format(format!(
            "truncated header: {} of {GRID_HEADER} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != GRID_MAGIC {
        return Err(Error::Format("bad magic, expected \"F32G\"".into()));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if w == 0 || h == 0 {
        return Err(Error::Format(format!("zero dimension {w}x{h}")));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("dimensions {w}x{h} overflow")))?;
    let payload = &bytes[GRID_HEADER..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {w}x{h} needs {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after {w}x{h} payload",
            payload.len() - expected
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Grid::from_values(w, h, values).map_err(|e| Error::Format(e.to_string()))
}

/// Binary P5 PGM, maxval 255, pixels 0 or 255.
pub fn encode_pgm(mask: &BitMask) -> Vec<u8> {
    let (w, h) = mask.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

/// Reads a P5 PGM with maxval below 256 as gray values scaled to [0, 1].
pub fn decode_pgm_gray(bytes: &[u8]) -> Result<Grid> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Format("bad magic, expected \"P5\"".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        token()?
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if w == 0 || h == 0 {
        return Err(Error::Format(format!("zero dimension {w}x{h}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    let n = w
        .checked_mul(h)
        .ok_or_else(|| Error::Format(format!("dimensions {w}x{h} overflow")))?;
    if data.len() != n {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {n}",
            data.len()
        )));
    }
    let m = maxval as f64;
    Grid::from_values(w, h, data.iter().map(|&b| b as f64 / m).collect())
}

/// Nonzero pixels are set.
pub fn decode_pgm(bytes: &[u8]) -> Result<BitMask> {
    let g = decode_pgm_gray(bytes)?;
    let (w, h) = g.dims();
    BitMask::from_bits(w, h, g.values().iter().map(|&v| v > 0.0).collect())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_grid(path: &Path) -> Result<Grid> {
    decode_grid(&read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_grid(path: &Path, grid: &Grid) -> Result<()> {
    write_bytes(path, &encode_grid(grid))
}

pub fn read_mask(path: &Path) -> Result<BitMask> {
    decode_pgm(&read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_mask(path: &Path, mask: &BitMask) -> Result<()> {
    write_bytes(path, &encode_pgm(mask))
}

/// Reads a prediction map stored either as F32G or as PGM.
pub fn read_map(path: &Path) -> Result<Grid> {
    let bytes = read_bytes(path)?;
    let decoded = if bytes.starts_with(GRID_MAGIC) {
        decode_grid(&bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm_gray(&bytes)
    } else {
        Err(Error::Format("neither an F32G grid nor a P5 PGM".into()))
    };
    decoded.map_err(|e| with_path(path, e))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `.json` files use the canonical schema, anything else is read as ICDAR
/// 2015 text. A missing image id falls back to the file stem.
pub fn load_annotation(path: &Path) -> Result<AnnotationFile> {
    let text = read_text(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let mut file = if is_json {
        parse_polygon_json(&text)
    } else {
        parse_icdar15(&text, &file_stem(path))
    }
    .map_err(|e| with_path(path, e))?;
    if file.image_id.is_empty() {
        file.image_id = file_stem(path);
    }
    Ok(file)
}

pub fn load_detections(path: &Path) -> Result<DetectionFile> {
    let mut file = parse_detections_json(&read_text(path)?).map_err(|e| with_path(path, e))?;
    if file.image_id.is_empty() {
        file.image_id = file_stem(path);
    }
    Ok(file)
}

/// Files in `dir` with one of `extensions`, sorted by name.
pub fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ok = path.is_file()
            && path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| extensions.contains(&e));
        if ok {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_annotation_dir(dir: &Path) -> Result<Vec<AnnotationFile>> {
    let files = list_files(dir, &["json", "txt"])?;
    let mut out: Vec<AnnotationFile> = files
        .iter()
        .map(|p| load_annotation(p))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    for pair in out.windows(2) {
        if pair[0].image_id == pair[1].image_id {
            return Err(Error::Config(format!(
                "{}: duplicate image id {:?}",
                dir.display(),
                pair[0].image_id
            )));
        }
    }
    Ok(out)
}
