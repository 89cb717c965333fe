//! Exact and raster geometry for instance footprints.
//!
//! Coordinates are continuous pixel units with the origin at the top-left
//! image corner and `y` pointing down. Pixel `(row i, col j)` covers
//! `[j, j+1) x [i, i+1)` and its center sits at `(j + 0.5, i + 0.5)`.

mod affine;
mod clip;
mod raster;

pub use affine::{apply_affine, AffineMap};
pub use clip::clip_polygon_to_frame;
pub use raster::{mask_iou, rasterize, RasterMask, Run};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("vertex {index} repeats its predecessor")]
    RepeatedVertex { index: usize },
    #[error("coordinate lists differ in length ({xs} x values, {ys} y values)")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("degenerate polygon: bounding box has zero width or height")]
    DegeneratePolygon,
    #[error("degenerate box ({x_min}, {y_min}, {x_max}, {y_max}): needs x_max > x_min and y_max > y_min")]
    DegenerateBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("mask frames differ: {0}x{1} vs {2}x{3}")]
    FrameMismatch(u32, u32, u32, u32),
    #[error("run {start}+{len} lies outside a {width}x{height} frame")]
    RunOutOfFrame {
        start: u64,
        len: u64,
        width: u32,
        height: u32,
    },
    #[error("affine map is not invertible (determinant {0})")]
    Singular(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A closed polygon; the last vertex connects back to the first.
///
/// Construction enforces at least three finite vertices with no vertex equal
/// to its predecessor (including the wrap-around pair). Zero area and
/// self-intersection are allowed here; dataset validation reports them.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for (index, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(GeometryError::NonFinite { index });
            }
        }
        let n = vertices.len();
        for index in 0..n {
            let prev = vertices[(index + n - 1) % n];
            if prev == vertices[index] {
                return Err(GeometryError::RepeatedVertex { index });
            }
        }
        Ok(Self { vertices })
    }

    /// Builds a polygon from parallel coordinate lists (the VIA layout).
    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(GeometryError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        Self::new(
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| Point2::new(x, y))
                .collect(),
        )
    }

    /// Skips validation. Callers guarantee the invariants hold.
    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point2>) -> Self {
        debug_assert!(vertices.len() >= 3);
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.y).collect()
    }

    /// Closed edges as `(start, end)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// `[x_min, y_min, x_max, y_max]` over the vertices, possibly degenerate.
    pub fn extents(&self) -> [f64; 4] {
        let mut e = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            e[0] = e[0].min(v.x);
            e[1] = e[1].min(v.y);
            e[2] = e[2].max(v.x);
            e[3] = e[3].max(v.y);
        }
        e
    }

    pub fn bbox(&self) -> Result<BoundingBox> {
        polygon_bbox(self)
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges()
            .map(|(a, b)| (b.x - a.x).hypot(b.y - a.y))
            .sum()
    }

    /// True when two non-adjacent edges touch or cross.
    pub fn self_intersects(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return true;
                }
            }
        }
        false
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Axis-aligned box with strictly positive area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(GeometryError::DegenerateBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// From the `[x, y, width, height]` layout used by prediction files.
    pub fn from_xywh(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        Self::new(x, y, x + width, y + height)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Continuous area, no +1 pixel correction.
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }

    pub fn extents(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

pub fn polygon_bbox(p: &Polygon) -> Result<BoundingBox> {
    let [x0, y0, x1, y1] = p.extents();
    if x1 <= x0 || y1 <= y0 {
        return Err(GeometryError::DegeneratePolygon);
    }
    BoundingBox::new(x0, y0, x1, y1)
}

/// Absolute shoelace area, taken relative to the first vertex. Mirroring a
/// polygon on the vertex grid therefore yields the identical value.
pub fn polygon_area(p: &Polygon) -> f64 {
    let o = p.vertices()[0];
    let twice: f64 = p
        .edges()
        .map(|(a, b)| (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y))
        .sum();
    twice.abs() / 2.0
}

pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    extents_iou(&a.extents(), &b.extents())
}

/// IoU over raw `[x_min, y_min, x_max, y_max]` extents. Degenerate inputs
/// have zero area; a zero union yields 0.
pub(crate) fn extents_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area_a = (a[2] - a[0]).max(0.0) * (a[3] - a[1]).max(0.0);
    let area_b = (b[2] - b[0]).max(0.0) * (b[3] - b[1]).max(0.0);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}
