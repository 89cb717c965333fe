//! Run-length encoded masks and scanline polygon rasterization.

use super::{GeometryError, Point2, Polygon, Result};

/// A foreground run over row-major pixel indices (`row * width + col`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Run {
    pub start: u64,
    pub len: u64,
}

impl Run {
    pub fn end(&self) -> u64 {
        self.start + self.len
    }
}

/// Binary mask stored as sorted, non-overlapping, non-adjacent runs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterMask {
    width: u32,
    height: u32,
    runs: Vec<Run>,
}

impl RasterMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            runs: Vec::new(),
        }
    }

    /// Normalizes arbitrary runs: sorts, drops empty runs, merges overlapping
    /// and adjacent ones.
    pub fn from_runs(width: u32, height: u32, mut runs: Vec<Run>) -> Result<Self> {
        let total = width as u64 * height as u64;
        for r in &runs {
            if r.end() > total {
                return Err(GeometryError::RunOutOfFrame {
                    start: r.start,
                    len: r.len,
                    width,
                    height,
                });
            }
        }
        runs.sort_unstable();
        let mut b = RunBuilder::default();
        for r in runs {
            b.push(r.start, r.len);
        }
        Ok(Self {
            width,
            height,
            runs: b.runs,
        })
    }

    /// From a row-major boolean buffer of `width * height` entries.
    pub fn from_bits(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len() as u64, width as u64 * height as u64);
        let mut b = RunBuilder::default();
        for (i, _) in bits.iter().enumerate().filter(|(_, &on)| on) {
            b.push(i as u64, 1);
        }
        Self {
            width,
            height,
            runs: b.runs,
        }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut bits = vec![false; self.width as usize * self.height as usize];
        for r in &self.runs {
            bits[r.start as usize..r.end() as usize].fill(true);
        }
        bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn pixel_count(&self) -> u64 {
        self.runs.iter().map(|r| r.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        if row >= self.height || col >= self.width {
            return false;
        }
        let idx = row as u64 * self.width as u64 + col as u64;
        let pos = self.runs.partition_point(|r| r.end() <= idx);
        self.runs.get(pos).is_some_and(|r| r.start <= idx)
    }

    fn check_frame(&self, other: &RasterMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(GeometryError::FrameMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Number of pixels set in both masks, walking both run lists once.
    pub fn intersection_count(&self, other: &RasterMask) -> Result<u64> {
        self.check_frame(other)?;
        let (a, b) = (&self.runs, &other.runs);
        let (mut i, mut j, mut n) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let lo = a[i].start.max(b[j].start);
            let hi = a[i].end().min(b[j].end());
            if hi > lo {
                n += hi - lo;
            }
            if a[i].end() < b[j].end() {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(n)
    }
}

#[derive(Default)]
struct RunBuilder {
    runs: Vec<Run>,
}

impl RunBuilder {
    /// Runs must arrive sorted by start.
    fn push(&mut self, start: u64, len: u64) {
        if len == 0 {
            return;
        }
        if let Some(last) = self.runs.last_mut() {
            if start <= last.end() {
                let end = last.end().max(start + len);
                last.len = end - last.start;
                return;
            }
        }
        self.runs.push(Run { start, len });
    }
}

/// First column whose center `j + 0.5` is at or right of `x`.
fn first_col_at_or_after(x: f64, width: u32) -> u32 {
    let w = width as i64;
    let mut j = ((x - 0.5).ceil().clamp(-1.0, w as f64 + 1.0)) as i64;
    j = j.clamp(0, w);
    while j > 0 && (j - 1) as f64 + 0.5 >= x {
        j -= 1;
    }
    while j < w && (j as f64 + 0.5) < x {
        j += 1;
    }
    j as u32
}

/// Even-odd scanline fill sampled at pixel centers.
///
/// Tie rule: an edge spans the half-open interval `[y_top, y_bottom)` so a
/// center on a vertex row belongs to the edge below it, and a horizontal span
/// covers centers in `[x_left, x_right)`. Centers on a left or top boundary
/// are filled, centers on a right or bottom boundary are not.
pub fn rasterize(p: &Polygon, width: u32, height: u32) -> RasterMask {
    let mut b = RunBuilder::default();
    let [_, y_min, _, y_max] = p.extents();
    let row_lo = ((y_min - 0.5).floor().max(0.0) as u64).min(height as u64);
    let row_hi = ((y_max + 0.5).ceil().max(0.0) as u64).min(height as u64);

    let edges: Vec<(Point2, Point2)> = p
        .edges()
        .filter(|(a, b)| a.y != b.y)
        .map(|(a, b)| if a.y < b.y { (a, b) } else { (b, a) })
        .collect();

    let mut xs: Vec<f64> = Vec::with_capacity(edges.len());
    for row in row_lo..row_hi {
        let cy = row as f64 + 0.5;
        xs.clear();
        for &(top, bot) in &edges {
            if cy >= top.y && cy < bot.y {
                xs.push(top.x + (cy - top.y) * (bot.x - top.x) / (bot.y - top.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        let base = row * width as u64;
        for pair in xs.chunks_exact(2) {
            let c0 = first_col_at_or_after(pair[0], width);
            let c1 = first_col_at_or_after(pair[1], width);
            if c1 > c0 {
                b.push(base + c0 as u64, (c1 - c0) as u64);
            }
        }
    }
    RasterMask {
        width,
        height,
        runs: b.runs,
    }
}

/// Pixel IoU of two masks on the same frame; two empty masks give 0.
pub fn mask_iou(a: &RasterMask, b: &RasterMask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let union = a.pixel_count() + b.pixel_count() - inter;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}
