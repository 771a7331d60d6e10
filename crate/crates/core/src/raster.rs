//! Dense grids and the bridge between polygons and pixels.
//!
//! Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` and is sampled at its center
//! `(i + 0.5, j + 0.5)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

/// Value stored by [`distance_transform`] when the mask has no set pixel.
pub const DISTANCE_SENTINEL: f64 = f64::MAX;

const EDGE_EPS: f64 = 1e-9;

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        let mut m = Self::new(width, height);
        m.bits.fill(value);
        m
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in raster order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    fn zip_with(&self, other: &BitMask, f: impl Fn(bool, bool) -> bool) -> Result<BitMask> {
        check_dims(self.dims(), other.dims())?;
        Ok(BitMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn and(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Number of pixels where exactly one of the masks is set.
    pub fn xor_count(&self, other: &BitMask) -> Result<usize> {
        Ok(self.zip_with(other, |a, b| a != b)?.count())
    }

    /// Every pixel set here is also set in `other`.
    pub fn is_subset_of(&self, other: &BitMask) -> Result<bool> {
        check_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// Set pixels with at least one 4-neighbour unset or outside the image.
    pub fn boundary_count(&self) -> usize {
        self.iter_set()
            .filter(|&(x, y)| {
                x == 0
                    || y == 0
                    || x + 1 == self.width
                    || y + 1 == self.height
                    || !self.get(x - 1, y)
                    || !self.get(x + 1, y)
                    || !self.get(x, y - 1)
                    || !self.get(x, y + 1)
            })
            .count()
    }
}

/// Row-major real-valued field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Grid {
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid value {i} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// 1.0 where the mask is set, 0.0 elsewhere.
    pub fn from_mask(mask: &BitMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            values: mask.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    /// Pixels whose value is `>= threshold`.
    pub fn threshold(&self, threshold: f64) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            bits: self.values.iter().map(|&v| v >= threshold).collect(),
        }
    }
}

/// Connected-component labelling; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelGrid {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label; index 0 holds the background.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// Pixel coordinates of one component in raster order.
    pub fn pixels(&self, label: u32) -> Vec<(usize, usize)> {
        let w = self.width;
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| (i % w, i / w))
            .collect()
    }

    pub fn mask(&self, label: u32) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// Calls `visit` for every pixel whose center lies inside the ring (even-odd)
/// or on one of its edges. Pixels may be visited more than once.
pub(crate) fn scan_polygon(
    points: &[Point],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize),
) {
    let n = points.len();
    if n == 0 {
        return;
    }
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let row_lo = ((ymin - 0.5 - EDGE_EPS).ceil().max(0.0)) as usize;
    let row_hi_f = (ymax - 0.5 + EDGE_EPS).floor();
    if row_hi_f < 0.0 {
        return;
    }
    let row_hi = (row_hi_f as usize).min(height.saturating_sub(1));
    let col_range = |lo: f64, hi: f64| -> Option<(usize, usize)> {
        let a = (lo - 0.5 - EDGE_EPS).ceil().max(0.0);
        let b = (hi - 0.5 + EDGE_EPS).floor().min(width as f64 - 1.0);
        (b >= a).then_some((a as usize, b as usize))
    };

    let mut xs: Vec<f64> = Vec::new();
    for j in row_lo..=row_hi {
        if j >= height {
            break;
        }
        let y = j as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            if (a.y <= y && y < b.y) || (b.y <= y && y < a.y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            if let Some((lo, hi)) = col_range(pair[0], pair[1]) {
                for i in lo..=hi {
                    visit(i, j);
                }
            }
        }
        // Centers lying exactly on an edge belong to the polygon.
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            if (a.y - y).abs() <= EDGE_EPS && (b.y - y).abs() <= EDGE_EPS {
                if let Some((lo, hi)) = col_range(a.x.min(b.x), a.x.max(b.x)) {
                    for i in lo..=hi {
                        visit(i, j);
                    }
                }
            } else if y >= a.y.min(b.y) - EDGE_EPS && y <= a.y.max(b.y) + EDGE_EPS {
                let t = ((y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
                let x = a.x + t * (b.x - a.x);
                let c = (x - 0.5).round();
                if (x - 0.5 - c).abs() <= EDGE_EPS && c >= 0.0 && c < width as f64 {
                    visit(c as usize, j);
                }
            }
        }
    }
}

/// Pixels whose centers fall inside the polygon (even-odd) or on its
/// boundary. Parts outside the grid are clipped.
pub fn rasterize_polygon(poly: &Polygon, width: usize, height: usize) -> BitMask {
    let mut mask = BitMask::new(width, height);
    scan_polygon(poly.vertices(), width, height, |x, y| mask.set(x, y, true));
    mask
}

/// Pixel counts of two rasterized polygons and their overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlapStats {
    pub intersection: u64,
    pub area_a: u64,
    pub area_b: u64,
}

impl OverlapStats {
    pub fn union(&self) -> u64 {
        self.area_a + self.area_b - self.intersection
    }

    pub fn iou(&self) -> f64 {
        match self.union() {
            0 => 0.0,
            u => self.intersection as f64 / u as f64,
        }
    }

    /// Intersection over the area of the first polygon.
    pub fn intersection_over_a(&self) -> f64 {
        match self.area_a {
            0 => 0.0,
            a => self.intersection as f64 / a as f64,
        }
    }
}

/// Rasterizes both polygons onto one grid covering their joint bounds at
/// `resolution` pixels per unit and counts the overlap.
///
/// # Panics
/// Panics if `resolution` is not a positive finite number.
pub fn overlap_stats(a: &Polygon, b: &Polygon, resolution: f64) -> OverlapStats {
    assert!(
        resolution > 0.0 && resolution.is_finite(),
        "resolution must be positive, got {resolution}"
    );
    let degenerate = |p: &Polygon| p.len() < 3 || p.area() == 0.0;
    if degenerate(a) || degenerate(b) {
        return OverlapStats::default();
    }
    let (Some((alo, ahi)), Some((blo, bhi))) = (a.bounds(), b.bounds()) else {
        return OverlapStats::default();
    };
    let lo = Point::new(alo.x.min(blo.x).floor(), alo.y.min(blo.y).floor());
    let hi = Point::new(ahi.x.max(bhi.x), ahi.y.max(bhi.y));
    let width = ((hi.x - lo.x) * resolution).ceil() as usize + 1;
    let height = ((hi.y - lo.y) * resolution).ceil() as usize + 1;
    let project = |p: &Polygon| -> Vec<Point> {
        p.vertices()
            .iter()
            .map(|&v| (v - lo) * resolution)
            .collect()
    };
    let mut in_a = vec![false; width * height];
    scan_polygon(&project(a), width, height, |x, y| in_a[y * width + x] = true);
    let mut in_b = vec![false; width * height];
    scan_polygon(&project(b), width, height, |x, y| in_b[y * width + x] = true);
    let mut stats = OverlapStats::default();
    for (&pa, &pb) in in_a.iter().zip(&in_b) {
        stats.area_a += pa as u64;
        stats.area_b += pb as u64;
        stats.intersection += (pa && pb) as u64;
    }
    stats
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Two-pass union-find labelling. Labels are numbered in raster order of
/// each component's first pixel.
pub fn connected_components(mask: &BitMask, connectivity: Connectivity) -> LabelGrid {
    let (w, h) = mask.dims();
    let mut provisional = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut k = 0;
            let mut push = |l: u32| {
                if l != 0 {
                    neighbours[k] = l;
                    k += 1;
                }
            };
            if x > 0 {
                push(provisional[y * w + x - 1]);
            }
            if y > 0 {
                push(provisional[(y - 1) * w + x]);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        push(provisional[(y - 1) * w + x - 1]);
                    }
                    if x + 1 < w {
                        push(provisional[(y - 1) * w + x + 1]);
                    }
                }
            }
            let label = if k == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                l
            } else {
                let m = *neighbours[..k].iter().min().unwrap();
                for &n in &neighbours[..k] {
                    union(&mut parent, m, n);
                }
                m
            };
            provisional[y * w + x] = label;
        }
    }
    let mut remap = vec![0u32; parent.len()];
    let mut count = 0u32;
    let mut labels = vec![0u32; w * h];
    for i in 0..w * h {
        let p = provisional[i];
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p) as usize;
        if remap[root] == 0 {
            count += 1;
            remap[root] = count;
        }
        labels[i] = remap[root];
    }
    LabelGrid {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Moore neighbourhood in clockwise-on-screen order, starting west.
const MOORE: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// Outer boundary of one component by Moore-neighbour tracing.
///
/// Vertices are the centers of the boundary pixels, in clockwise-on-screen
/// order starting from the component's first pixel in raster order.
/// Components with fewer than `min_area` pixels are rejected.
pub fn trace_contour(labels: &LabelGrid, label: u32, min_area: usize) -> Result<Polygon> {
    if label == 0 || label > labels.count {
        return Err(Error::InvalidParameter(format!(
            "label {label} not in 1..={}",
            labels.count
        )));
    }
    let (w, h) = (labels.width as i64, labels.height as i64);
    let area = labels.labels.iter().filter(|&&l| l == label).count();
    if area < min_area.max(1) {
        return Err(Error::InvalidParameter(format!(
            "component {label} has {area} pixels, below the minimum of {min_area}"
        )));
    }
    let start = labels
        .labels
        .iter()
        .position(|&l| l == label)
        .expect("label occurs");
    let start = ((start as i64) % w, (start as i64) / w);
    let inside = |(x, y): (i64, i64)| {
        x >= 0 && y >= 0 && x < w && y < h && labels.labels[(y * w + x) as usize] == label
    };
    let dir_index = |dx: i64, dy: i64| MOORE.iter().position(|&d| d == (dx, dy)).unwrap();

    // Returns the next boundary pixel and the backtrack direction seen from it.
    let step = |cur: (i64, i64), back: usize| -> Option<((i64, i64), usize)> {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let cand = (cur.0 + MOORE[d].0, cur.1 + MOORE[d].1);
            if inside(cand) {
                let prev = (back + k - 1) % 8;
                let bpos = (cur.0 + MOORE[prev].0, cur.1 + MOORE[prev].1);
                return Some((cand, dir_index(bpos.0 - cand.0, bpos.1 - cand.1)));
            }
        }
        None
    };

    let center = |(x, y): (i64, i64)| Point::new(x as f64 + 0.5, y as f64 + 0.5);
    let mut chain = vec![center(start)];
    // The west neighbour of the first raster pixel is never in the component.
    let Some(first) = step(start, 0) else {
        return Polygon::new(chain);
    };
    let (mut cur, mut back) = first;
    let limit = 4 * (labels.labels.len() + 4);
    while chain.len() <= limit {
        let (next, nb) = step(cur, back).expect("component has at least two pixels");
        if cur == start && next == first.0 {
            break;
        }
        chain.push(center(cur));
        cur = next;
        back = nb;
    }
    Polygon::new(chain)
}

/// Outer boundary of one component along pixel edges.
///
/// Vertices are integer pixel corners, one per unit step, clockwise on
/// screen starting from the top-left corner of the component's first pixel.
/// Diagonally touching pixels are joined, matching 8-connectivity.
pub fn trace_outline(labels: &LabelGrid, label: u32) -> Result<Vec<Point>> {
    if label == 0 || label > labels.count {
        return Err(Error::InvalidParameter(format!(
            "label {label} not in 1..={}",
            labels.count
        )));
    }
    let (w, h) = (labels.width as i64, labels.height as i64);
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w && y < h && labels.labels[(y * w + x) as usize] == label
    };
    let start = labels
        .labels
        .iter()
        .position(|&l| l == label)
        .expect("label occurs");
    let (sx, sy) = ((start as i64) % w, (start as i64) / w);

    // Is there a boundary edge leaving corner (x, y) in direction d?
    // Interior lies to the right of the direction of travel.
    let edge = |x: i64, y: i64, (dx, dy): (i64, i64)| -> bool {
        match (dx, dy) {
            (1, 0) => inside(x, y) && !inside(x, y - 1),
            (0, 1) => inside(x - 1, y) && !inside(x, y),
            (-1, 0) => inside(x - 1, y - 1) && !inside(x - 1, y),
            (0, -1) => inside(x, y - 1) && !inside(x - 1, y - 1),
            _ => false,
        }
    };

    let mut ring = Vec::new();
    let (mut x, mut y, mut dir) = (sx, sy, (1i64, 0i64));
    let limit = 4 * labels.labels.len() + 8;
    loop {
        ring.push(Point::new(x as f64, y as f64));
        x += dir.0;
        y += dir.1;
        if (x, y) == (sx, sy) || ring.len() > limit {
            break;
        }
        let left = (dir.1, -dir.0);
        let right = (-dir.1, dir.0);
        dir = [left, dir, right]
            .into_iter()
            .find(|&d| edge(x, y, d))
            .expect("outline is closed");
    }
    Ok(ring)
}

/// Squared 1-D distance transform of a sampled function (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        // z[0] is -inf and f is finite, so the loop stops at k = 0.
        let s = loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
            } else {
                break s;
            }
        };
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from every pixel center to the nearest set
/// pixel center. Set pixels hold 0; an empty mask yields
/// [`DISTANCE_SENTINEL`] everywhere.
pub fn distance_transform(mask: &BitMask) -> Grid {
    let (w, h) = mask.dims();
    if mask.is_empty() {
        return Grid {
            width: w,
            height: h,
            values: vec![DISTANCE_SENTINEL; w * h],
        };
    }
    // Large enough to never win against a real squared distance.
    let far = ((w * w + h * h) as f64 + 1.0) * 4.0;
    let mut sq: Vec<f64> = mask.bits.iter().map(|&b| if b { 0.0 } else { far }).collect();
    let n = w.max(h);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = sq[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    Grid {
        width: w,
        height: h,
        values: sq.into_iter().map(f64::sqrt).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> BitMask {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BitMask::from_bits(w, h, bits).unwrap()
    }

    #[test]
    fn rasterize_square_by_pixel_centers() {
        let sq = Polygon::from_coords(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]).unwrap();
        let m = rasterize_polygon(&sq, 4, 4);
        let set: Vec<_> = m.iter_set().collect();
        assert_eq!(set, vec![(1, 1), (2, 1), (1, 2), (2, 2)]);
    }

    #[test]
    fn rasterize_degenerate_and_full() {
        let flat = Polygon::from_coords(&[(0.2, 0.3), (2.7, 0.3), (1.1, 0.3)]).unwrap();
        assert!(rasterize_polygon(&flat, 4, 4).is_empty());
        let cover =
            Polygon::from_coords(&[(-1.0, -1.0), (9.0, -1.0), (9.0, 9.0), (-1.0, 9.0)]).unwrap();
        assert_eq!(rasterize_polygon(&cover, 5, 3).count(), 15);
        let away =
            Polygon::from_coords(&[(10.0, 10.0), (12.0, 10.0), (12.0, 12.0), (10.0, 12.0)]).unwrap();
        assert!(rasterize_polygon(&away, 5, 5).is_empty());
    }

    #[test]
    fn rasterize_owns_centers_on_edges() {
        let sq = Polygon::from_coords(&[(0.5, 0.5), (2.5, 0.5), (2.5, 2.5), (0.5, 2.5)]).unwrap();
        assert_eq!(rasterize_polygon(&sq, 4, 4).count(), 9);
    }

    #[test]
    fn components_examples() {
        let m = mask_from(&["##...##", "##...##"]);
        assert_eq!(connected_components(&m, Connectivity::Eight).count(), 2);
        let diag = mask_from(&["#.", ".#"]);
        assert_eq!(connected_components(&diag, Connectivity::Eight).count(), 1);
        assert_eq!(connected_components(&diag, Connectivity::Four).count(), 2);
        let empty = BitMask::new(3, 3);
        assert_eq!(connected_components(&empty, Connectivity::Eight).count(), 0);
    }

    #[test]
    fn components_label_in_raster_order() {
        let m = mask_from(&["..#", "#..", "#.#"]);
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.count(), 3);
        assert_eq!(l.get(2, 0), 1);
        assert_eq!(l.get(0, 1), 2);
        assert_eq!(l.get(2, 2), 3);
    }

    #[test]
    fn components_merge_u_shape() {
        let m = mask_from(&["#.#", "#.#", "###"]);
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.count(), 1);
    }

    #[test]
    fn contour_of_block() {
        let mut m = BitMask::new(5, 5);
        for y in 0..3 {
            for x in 0..3 {
                m.set(x, y, true);
            }
        }
        let l = connected_components(&m, Connectivity::Eight);
        let c = trace_contour(&l, 1, 1).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.raw_signed_area() > 0.0);
        assert_eq!(rasterize_polygon(&c, 5, 5), m);
    }

    #[test]
    fn contour_of_thin_bar() {
        let mut m = BitMask::new(7, 3);
        for x in 1..6 {
            m.set(x, 1, true);
        }
        let l = connected_components(&m, Connectivity::Eight);
        let c = trace_contour(&l, 1, 1).unwrap();
        let r = rasterize_polygon(&c, 7, 3);
        assert!(m.is_subset_of(&r).unwrap());
    }

    #[test]
    fn contour_rejects_small_and_unknown() {
        let mut m = BitMask::new(3, 3);
        m.set(1, 1, true);
        let l = connected_components(&m, Connectivity::Eight);
        assert!(trace_contour(&l, 1, 2).is_err());
        assert!(trace_contour(&l, 2, 1).is_err());
        assert!(trace_contour(&l, 0, 1).is_err());
        assert_eq!(trace_contour(&l, 1, 1).unwrap().len(), 1);
    }

    #[test]
    fn contour_of_concave_shape() {
        let m = mask_from(&[
            "#####.", //
            "#####.",
            "##....",
            "##....",
            "#####.",
            "#####.",
        ]);
        let l = connected_components(&m, Connectivity::Eight);
        let c = trace_contour(&l, 1, 1).unwrap();
        assert!(c.raw_signed_area() > 0.0);
        assert_eq!(rasterize_polygon(&c, 6, 6), m);
    }

    #[test]
    fn distance_examples() {
        let mut m = BitMask::new(5, 5);
        m.set(2, 2, true);
        let d = distance_transform(&m);
        assert_eq!(d.get(2, 4), 2.0);
        assert_eq!(d.get(2, 2), 0.0);
        assert_eq!(d.get(0, 0), 8f64.sqrt());
        let full = BitMask::filled(4, 3, true);
        assert!(distance_transform(&full).values().iter().all(|&v| v == 0.0));
        let empty = BitMask::new(3, 2);
        assert!(distance_transform(&empty)
            .values()
            .iter()
            .all(|&v| v == DISTANCE_SENTINEL));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::from_values(2, 2, vec![0.0; 3]).is_err());
        assert!(Grid::from_values(1, 1, vec![f64::NAN]).is_err());
        assert!(Grid::from_values(0, 1, vec![]).is_err());
        let g = Grid::from_values(2, 1, vec![0.2, 0.7]).unwrap();
        assert_eq!(g.threshold(0.5).bits(), &[false, true]);
    }
}
