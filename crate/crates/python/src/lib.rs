//! Python bindings for the `textregion` crate.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use textregion::eval::{evaluate_with, EvalConfig};
use textregion::formats;
use textregion::geometry::{self, Point, Polygon};
use textregion::inference::{self, Detection, RatioAggregation};
use textregion::labels::{self, LabelSet, RatioSampler, TextInstance, DEFAULT_RATIOS};
use textregion::losses;
use textregion::raster::{BitMask, Grid};
use textregion::Error;

create_exception!(textregion_py, TextRegionError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => TextRegionError::new_err(other.to_string()),
    }
}

fn grid_from_rows(rows: &[Vec<f64>]) -> PyResult<Grid> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if w == 0 || rows.iter().any(|r| r.len() != w) {
        return Err(TextRegionError::new_err("expected a non-empty rectangular 2-D list"));
    }
    Grid::from_values(w, h, rows.concat()).map_err(to_py)
}

fn grid_rows(g: &Grid) -> Vec<Vec<f64>> {
    g.values().chunks(g.width()).map(<[f64]>::to_vec).collect()
}

fn mask_rows(m: &BitMask) -> Vec<Vec<u8>> {
    m.bits()
        .chunks(m.width())
        .map(|r| r.iter().map(|&b| b as u8).collect())
        .collect()
}

#[pyclass(name = "Polygon", module = "textregion_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyPolygon {
    inner: Polygon,
}

#[pymethods]
impl PyPolygon {
    #[new]
    fn new(points: Vec<(f64, f64)>) -> PyResult<Self> {
        let inner = Polygon::from_coords(&points).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    /// Positive for clockwise-on-screen vertex order.
    fn signed_area(&self) -> PyResult<f64> {
        geometry::signed_area(&self.inner).map_err(to_py)
    }

    fn is_simple(&self) -> bool {
        self.inner.is_simple()
    }

    fn expand(&self, distance: f64) -> PyResult<Self> {
        let inner = geometry::expand_polygon(&self.inner, distance).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// None when the polygon collapses.
    fn shrink(&self, distance: f64) -> PyResult<Option<Self>> {
        Ok(geometry::shrink_polygon(&self.inner, distance)
            .map_err(to_py)?
            .map(|inner| Self { inner }))
    }

    fn offset_distance(&self, ratio: f64) -> PyResult<f64> {
        geometry::offset_distance_for_ratio(&self.inner, ratio).map_err(to_py)
    }

    #[pyo3(signature = (other, resolution = 4.0))]
    fn iou(&self, other: &PyPolygon, resolution: f64) -> PyResult<f64> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(TextRegionError::new_err("resolution must be positive"));
        }
        Ok(geometry::polygon_iou(&self.inner, &other.inner, resolution))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Polygon({:?})", self.points())
    }
}

#[pyfunction]
fn min_area_rect(points: Vec<(f64, f64)>) -> PyResult<PyPolygon> {
    let pts: Vec<Point> = points.into_iter().map(Point::from).collect();
    let inner = geometry::min_area_rect(&pts).map_err(to_py)?;
    Ok(PyPolygon { inner })
}

#[pyclass(name = "LabelSet", module = "textregion_py", frozen)]
struct PyLabelSet {
    inner: LabelSet,
}

#[pymethods]
impl PyLabelSet {
    #[getter]
    fn full_mask(&self) -> Vec<Vec<u8>> {
        mask_rows(&self.inner.full_mask)
    }

    #[getter]
    fn central_mask(&self) -> Vec<Vec<u8>> {
        mask_rows(&self.inner.central_mask)
    }

    #[getter]
    fn ratio_map(&self) -> Vec<Vec<f64>> {
        grid_rows(&self.inner.ratio_map)
    }

    #[getter]
    fn train_mask(&self) -> Vec<Vec<u8>> {
        mask_rows(&self.inner.train_mask)
    }

    #[getter]
    fn overlap_pixels(&self) -> usize {
        self.inner.overlap_pixels
    }

    /// One dict per non-ignore instance.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .per_instance
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("index", r.index)?;
                d.set_item("ratio", r.ratio)?;
                d.set_item("distance", r.distance)?;
                d.set_item("status", format!("{:?}", r.status).to_lowercase())?;
                d.set_item("central_pixels", r.central_pixels)?;
                d.set_item(
                    "central_polygon",
                    r.central_polygon
                        .as_ref()
                        .map(|p| PyPolygon { inner: p.clone() }),
                )?;
                Ok(d)
            })
            .collect()
    }
}

#[pyfunction]
#[pyo3(signature = (polygons, width, height, ignore = None, ratios = None, fixed = None, seed = 0, iteration = 0))]
#[allow(clippy::too_many_arguments)]
fn generate_labels(
    polygons: Vec<PyPolygon>,
    width: usize,
    height: usize,
    ignore: Option<Vec<bool>>,
    ratios: Option<Vec<f64>>,
    fixed: Option<f64>,
    seed: u64,
    iteration: u64,
) -> PyResult<PyLabelSet> {
    let ignore = ignore.unwrap_or_else(|| vec![false; polygons.len()]);
    if ignore.len() != polygons.len() {
        return Err(TextRegionError::new_err("ignore must match polygons in length"));
    }
    let instances: Vec<TextInstance> = polygons
        .into_iter()
        .zip(ignore)
        .map(|(p, ig)| TextInstance {
            polygon: p.inner,
            ignore: ig,
            transcription: None,
        })
        .collect();
    let sampler = match (fixed, ratios) {
        (Some(r), _) => RatioSampler::fixed(r),
        (None, Some(set)) => RatioSampler::uniform(set, seed),
        (None, None) => RatioSampler::uniform(DEFAULT_RATIOS.to_vec(), seed),
    }
    .map_err(to_py)?;
    let inner =
        labels::generate_labels(&instances, width, height, &sampler, iteration).map_err(to_py)?;
    Ok(PyLabelSet { inner })
}

#[pyclass(name = "PostprocessConfig", module = "textregion_py", from_py_object)]
#[derive(Clone)]
struct PyPostprocessConfig {
    #[pyo3(get, set)]
    central_threshold: f64,
    #[pyo3(get, set)]
    full_threshold: f64,
    #[pyo3(get, set)]
    min_component_area: usize,
    #[pyo3(get, set)]
    min_score: f64,
    #[pyo3(get, set)]
    quad_mode: bool,
    /// "mean" or "median".
    #[pyo3(get, set)]
    ratio_aggregation: String,
    #[pyo3(get, set)]
    gate_with_full: bool,
}

#[pymethods]
impl PyPostprocessConfig {
    #[new]
    fn new() -> Self {
        let d = inference::PostprocessConfig::default();
        Self {
            central_threshold: d.central_threshold,
            full_threshold: d.full_threshold,
            min_component_area: d.min_component_area,
            min_score: d.min_score,
            quad_mode: d.quad_mode,
            ratio_aggregation: "mean".into(),
            gate_with_full: d.gate_with_full,
        }
    }
}

impl PyPostprocessConfig {
    fn to_core(&self) -> PyResult<inference::PostprocessConfig> {
        let ratio_aggregation = match self.ratio_aggregation.as_str() {
            "mean" => RatioAggregation::Mean,
            "median" => RatioAggregation::Median,
            other => {
                return Err(TextRegionError::new_err(format!(
                    "ratio_aggregation must be \"mean\" or \"median\", got {other:?}"
                )))
            }
        };
        Ok(inference::PostprocessConfig {
            central_threshold: self.central_threshold,
            full_threshold: self.full_threshold,
            min_component_area: self.min_component_area,
            min_score: self.min_score,
            quad_mode: self.quad_mode,
            ratio_aggregation,
            gate_with_full: self.gate_with_full,
            ..Default::default()
        })
    }
}

/// Returns (polygon, score) pairs sorted by score, highest first.
#[pyfunction]
#[pyo3(signature = (full, central, ratio, config = None))]
fn extract_detections(
    full: Vec<Vec<f64>>,
    central: Vec<Vec<f64>>,
    ratio: Vec<Vec<f64>>,
    config: Option<PyPostprocessConfig>,
) -> PyResult<Vec<(PyPolygon, f64)>> {
    let cfg = match config {
        Some(c) => c.to_core()?,
        None => inference::PostprocessConfig::default(),
    };
    let dets = inference::extract_detections(
        &grid_from_rows(&full)?,
        &grid_from_rows(&central)?,
        &grid_from_rows(&ratio)?,
        &cfg,
    )
    .map_err(to_py)?;
    Ok(dets
        .into_iter()
        .map(|d| (PyPolygon { inner: d.polygon }, d.score))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (detections, gts, ignore = None, iou_threshold = 0.5))]
fn evaluate<'py>(
    py: Python<'py>,
    detections: Vec<PyPolygon>,
    gts: Vec<PyPolygon>,
    ignore: Option<Vec<bool>>,
    iou_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ignore = ignore.unwrap_or_else(|| vec![false; gts.len()]);
    if ignore.len() != gts.len() {
        return Err(TextRegionError::new_err("ignore must match gts in length"));
    }
    let dets: Vec<Detection> = detections
        .into_iter()
        .map(|p| Detection {
            polygon: p.inner,
            score: 1.0,
        })
        .collect();
    let gts: Vec<TextInstance> = gts
        .into_iter()
        .zip(ignore)
        .map(|(p, ig)| TextInstance {
            polygon: p.inner,
            ignore: ig,
            transcription: None,
        })
        .collect();
    let r = evaluate_with(&dets, &gts, &EvalConfig::with_threshold(iou_threshold)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("f_measure", r.f_measure)?;
    d.set_item("true_positives", r.true_positives)?;
    d.set_item("num_detections", r.num_detections)?;
    d.set_item("num_gt", r.num_gt)?;
    let matches: Vec<(usize, usize, f64)> =
        r.matches.iter().map(|m| (m.detection, m.gt, m.iou)).collect();
    d.set_item("matches", matches)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (pred, target, mask = None))]
fn dice(pred: Vec<Vec<f64>>, target: Vec<Vec<f64>>, mask: Option<Vec<Vec<f64>>>) -> PyResult<f64> {
    let pred = grid_from_rows(&pred)?;
    let target = grid_from_rows(&target)?;
    let mask = match mask {
        Some(m) => grid_from_rows(&m)?.threshold(0.5),
        None => BitMask::filled(pred.width(), pred.height(), true),
    };
    losses::dice(&pred, &target, &mask).map_err(to_py)
}

#[pyfunction]
fn smooth_l1(x: f64) -> f64 {
    losses::smooth_l1(x)
}

/// Returns (polygon, ignore, transcription) per line.
#[pyfunction]
fn parse_icdar15(text: &str) -> PyResult<Vec<(PyPolygon, bool, Option<String>)>> {
    let file = formats::parse_icdar15(text, "").map_err(to_py)?;
    Ok(file
        .instances
        .into_iter()
        .map(|i| (PyPolygon { inner: i.polygon }, i.ignore, i.transcription))
        .collect())
}

#[pyfunction]
fn read_grid(path: std::path::PathBuf) -> PyResult<Vec<Vec<f64>>> {
    Ok(grid_rows(&formats::read_grid(&path).map_err(to_py)?))
}

#[pyfunction]
fn write_grid(path: std::path::PathBuf, rows: Vec<Vec<f64>>) -> PyResult<()> {
    formats::write_grid(&path, &grid_from_rows(&rows)?).map_err(to_py)
}

#[pymodule]
fn textregion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TextRegionError", m.py().get_type::<TextRegionError>())?;
    m.add_class::<PyPolygon>()?;
    m.add_class::<PyLabelSet>()?;
    m.add_class::<PyPostprocessConfig>()?;
    m.add_function(wrap_pyfunction!(min_area_rect, m)?)?;
    m.add_function(wrap_pyfunction!(generate_labels, m)?)?;
    m.add_function(wrap_pyfunction!(extract_detections, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(dice, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_l1, m)?)?;
    m.add_function(wrap_pyfunction!(parse_icdar15, m)?)?;
    m.add_function(wrap_pyfunction!(read_grid, m)?)?;
    m.add_function(wrap_pyfunction!(write_grid, m)?)?;
    Ok(())
}
