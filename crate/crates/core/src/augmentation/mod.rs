//! Label-consistent augmentation: shortest-edge resize, flips, rotation
//! about the image center, and brightness/contrast jitter.
//!
//! Polygon vertices inside a [`Sample`] are kept on a grid of 2^-32 px, so
//! a flip `x -> W - x` is exact and flipping twice restores every bit.
//! All resampling is bilinear at pixel centers `(j + 0.5, i + 0.5)`.

mod raster_image;

pub use raster_image::RasterImage;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::GroundTruthAnnotation;
use crate::geometry::{apply_affine, clip_polygon_to_frame, AffineMap, Point2, Polygon};
use crate::rng::RngState;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("{path}: {message}")]
    Image { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error("sample truths reference more than one image ({0:?} and {1:?})")]
    MixedImages(String, String),
}

impl AugmentError {
    fn image(path: &Path, e: image::ImageError) -> Self {
        AugmentError::Image {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, AugmentError>;

const GRID: f64 = 4_294_967_296.0;

fn snap(v: f64) -> f64 {
    (v * GRID).round() / GRID
}

/// Snaps vertices to the grid and drops repeats the snapping created.
fn snapped(p: &Polygon) -> Option<Polygon> {
    let mut pts: Vec<Point2> = Vec::with_capacity(p.len());
    for v in p.vertices() {
        let q = Point2::new(snap(v.x), snap(v.y));
        if pts.last() != Some(&q) {
            pts.push(q);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    Polygon::new(pts).ok()
}

/// An image and its ground truths.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    image: RasterImage,
    truths: Vec<GroundTruthAnnotation>,
}

impl Sample {
    /// Clips every polygon to the frame and snaps it to the vertex grid.
    /// Truths with nothing left inside the frame are dropped.
    pub fn new(image: RasterImage, truths: Vec<GroundTruthAnnotation>) -> Result<Self> {
        if let Some(first) = truths.first() {
            if let Some(other) = truths.iter().find(|t| t.image_ref != first.image_ref) {
                return Err(AugmentError::MixedImages(first.image_ref.clone(), other.image_ref.clone()));
            }
        }
        let (w, h) = (image.width(), image.height());
        let truths = truths
            .into_iter()
            .filter_map(|t| {
                let p = clip_polygon_to_frame(&t.polygon, w, h).and_then(|p| snapped(&p))?;
                Some(GroundTruthAnnotation { polygon: p, ..t })
            })
            .collect();
        Ok(Self { image, truths })
    }

    pub fn image(&self) -> &RasterImage {
        &self.image
    }

    pub fn truths(&self) -> &[GroundTruthAnnotation] {
        &self.truths
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    pub fn into_parts(self) -> (RasterImage, Vec<GroundTruthAnnotation>) {
        (self.image, self.truths)
    }

    fn map_truths(&self, f: impl Fn(&Polygon) -> Option<Polygon>) -> Vec<GroundTruthAnnotation> {
        self.truths
            .iter()
            .filter_map(|t| {
                Some(GroundTruthAnnotation {
                    polygon: f(&t.polygon)?,
                    ..t.clone()
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Shortest-edge length after resizing, px.
    pub resize_target: u32,
    pub hflip_p: f64,
    pub vflip_p: f64,
    /// Rotation angle is drawn from `[-limit, +limit]` degrees.
    pub rotation_limit: f64,
    pub photometric_p: f64,
    /// Bound on both the contrast and the brightness offsets.
    pub photometric_limit: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            resize_target: 800,
            hflip_p: 0.0,
            vflip_p: 0.5,
            rotation_limit: 15.0,
            photometric_p: 0.5,
            photometric_limit: 0.2,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AugmentError::InvalidConfig(m));
        if self.resize_target == 0 {
            return bad("resize target must be at least 1 px".into());
        }
        for (name, p) in [
            ("hflip_p", self.hflip_p),
            ("vflip_p", self.vflip_p),
            ("photometric_p", self.photometric_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.rotation_limit >= 0.0 && self.rotation_limit.is_finite()) {
            return bad(format!("rotation limit {} must be finite and >= 0", self.rotation_limit));
        }
        if !(0.0..=1.0).contains(&self.photometric_limit) {
            return bad(format!("photometric limit {} outside [0, 1]", self.photometric_limit));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipAxis {
    /// Mirrors columns: `x -> W - x`.
    Horizontal,
    /// Mirrors rows: `y -> H - y`.
    Vertical,
}

/// Output size for a shortest-edge resize, rounding half up.
pub fn resized_dims(width: u32, height: u32, target: u32) -> (u32, u32) {
    let min = width.min(height) as u64;
    let scale = |v: u32| ((2 * v as u64 * target as u64 + min) / (2 * min)) as u32;
    (scale(width).max(1), scale(height).max(1))
}

fn bilinear_clamped(img: &RasterImage, sx: f64, sy: f64, out: &mut [u8]) {
    let (w, h) = (img.width(), img.height());
    let sx = sx.clamp(0.0, (w - 1) as f64);
    let sy = sy.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
    for (c, o) in out.iter_mut().enumerate() {
        let c = c as u8;
        let top = img.get(x0, y0, c) as f64 * (1.0 - fx) + img.get(x1, y0, c) as f64 * fx;
        let bot = img.get(x0, y1, c) as f64 * (1.0 - fx) + img.get(x1, y1, c) as f64 * fx;
        *o = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
}

/// Scales so the shorter side becomes `target`. Each axis uses the factor
/// `output / input` of the rounded output size.
pub fn resize_shortest_edge(s: &Sample, target: u32) -> Sample {
    let (w, h) = (s.width(), s.height());
    let (ow, oh) = resized_dims(w, h, target.max(1));
    if (ow, oh) == (w, h) {
        return s.clone();
    }
    let ch = s.image.channels();
    let mut samples = vec![0u8; ow as usize * oh as usize * ch as usize];
    let (rx, ry) = (w as f64 / ow as f64, h as f64 / oh as f64);
    for (i, row) in samples.chunks_mut(ow as usize * ch as usize).enumerate() {
        let sy = (i as f64 + 0.5) * ry - 0.5;
        for (j, px) in row.chunks_mut(ch as usize).enumerate() {
            bilinear_clamped(&s.image, (j as f64 + 0.5) * rx - 0.5, sy, px);
        }
    }
    let image = RasterImage::new(ow, oh, ch, samples).expect("size computed above");
    let (fw, fh) = (ow as f64, oh as f64);
    let (iw, ih) = (w as f64, h as f64);
    let truths = s.map_truths(|p| {
        let pts = p.vertices().iter().map(|v| Point2::new(v.x * fw / iw, v.y * fh / ih)).collect();
        snapped(&Polygon::new(pts).ok()?)
    });
    Sample { image, truths }
}

/// Mirrors pixels and polygons. Applying it twice restores the sample.
pub fn flip(s: &Sample, axis: FlipAxis) -> Sample {
    let (w, h) = (s.width() as usize, s.height() as usize);
    let ch = s.image.channels() as usize;
    let src = s.image.samples();
    let mut samples = Vec::with_capacity(src.len());
    let stride = w * ch;
    match axis {
        FlipAxis::Vertical => {
            for row in src.chunks(stride).rev() {
                samples.extend_from_slice(row);
            }
        }
        FlipAxis::Horizontal => {
            for row in src.chunks(stride) {
                for px in row.chunks(ch).rev() {
                    samples.extend_from_slice(px);
                }
            }
        }
    }
    let image = RasterImage::new(s.width(), s.height(), ch as u8, samples).expect("same shape");
    let (fw, fh) = (w as f64, h as f64);
    let truths = s.map_truths(|p| {
        let pts = p
            .vertices()
            .iter()
            .map(|v| match axis {
                FlipAxis::Horizontal => Point2::new(fw - v.x, v.y),
                FlipAxis::Vertical => Point2::new(v.x, fh - v.y),
            })
            .collect();
        Polygon::new(pts).ok()
    });
    Sample { image, truths }
}

/// Smallest clipped area a rotated truth must keep, px².
const MIN_TRUTH_AREA: f64 = 1.0;

/// Rotates by `degrees` about the frame center on the same canvas.
/// Positive angles turn clockwise on screen. Pixels mapped from outside
/// the source are black. Polygons are clipped to the frame; truths left
/// with less than 1 px² are dropped.
pub fn rotate(s: &Sample, degrees: f64) -> Sample {
    if degrees == 0.0 {
        return s.clone();
    }
    let (w, h) = (s.width(), s.height());
    let center = Point2::new(w as f64 / 2.0, h as f64 / 2.0);
    let forward = AffineMap::rotation_about(center, degrees);
    let back = AffineMap::rotation_about(center, -degrees);
    let ch = s.image.channels() as usize;
    let mut samples = vec![0u8; w as usize * h as usize * ch];
    for (i, row) in samples.chunks_mut(w as usize * ch).enumerate() {
        for (j, px) in row.chunks_mut(ch).enumerate() {
            let src = back.apply(Point2::new(j as f64 + 0.5, i as f64 + 0.5));
            if src.x < 0.0 || src.y < 0.0 || src.x > w as f64 || src.y > h as f64 {
                continue;
            }
            bilinear_clamped(&s.image, src.x - 0.5, src.y - 0.5, px);
        }
    }
    let image = RasterImage::new(w, h, ch as u8, samples).expect("same shape");
    let truths = s.map_truths(|p| {
        let clipped = clip_polygon_to_frame(&apply_affine(p, &forward), w, h)?;
        if clipped.area() < MIN_TRUTH_AREA {
            return None;
        }
        snapped(&clipped)
    });
    Sample { image, truths }
}

/// `v' = clamp(round(v * (1 + alpha) + beta * 255), 0, 255)` per sample.
pub fn brightness_contrast(img: &RasterImage, alpha: f64, beta: f64) -> RasterImage {
    let gain = 1.0 + alpha;
    let offset = beta * 255.0;
    let samples = img
        .samples()
        .iter()
        .map(|&v| (v as f64 * gain + offset).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::new(img.width(), img.height(), img.channels(), samples).expect("same shape")
}

/// What one [`augment`] call drew and did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentTrace {
    /// Raw uniforms in draw order: hflip, vflip, angle, photometric, alpha,
    /// beta. Every call draws all six.
    pub draws: [f64; 6],
    pub hflip: bool,
    pub vflip: bool,
    pub angle: f64,
    pub photometric: bool,
    pub alpha: f64,
    pub beta: f64,
    /// Stable ids of truths lost to clipping or the area floor.
    pub dropped: Vec<u64>,
}

/// Runs the pipeline: resize, horizontal flip, vertical flip, rotation,
/// then brightness/contrast.
pub fn augment(s: &Sample, cfg: &AugmentConfig, rng: &mut RngState) -> Result<(Sample, AugmentTrace)> {
    cfg.validate()?;
    let mut draws = [0.0; 6];
    for d in &mut draws {
        *d = rng.next_f64();
    }
    let spread = |limit: f64, u: f64| -limit + 2.0 * limit * u;
    let trace_base = AugmentTrace {
        draws,
        hflip: draws[0] < cfg.hflip_p,
        vflip: draws[1] < cfg.vflip_p,
        angle: spread(cfg.rotation_limit, draws[2]),
        photometric: draws[3] < cfg.photometric_p,
        alpha: spread(cfg.photometric_limit, draws[4]),
        beta: spread(cfg.photometric_limit, draws[5]),
        dropped: Vec::new(),
    };

    let mut out = resize_shortest_edge(s, cfg.resize_target);
    if trace_base.hflip {
        out = flip(&out, FlipAxis::Horizontal);
    }
    if trace_base.vflip {
        out = flip(&out, FlipAxis::Vertical);
    }
    out = rotate(&out, trace_base.angle);
    if trace_base.photometric {
        out.image = brightness_contrast(&out.image, trace_base.alpha, trace_base.beta);
    }
    let kept: HashSet<u64> = out.truths.iter().map(|t| t.stable_id).collect();
    let dropped = s
        .truths
        .iter()
        .map(|t| t.stable_id)
        .filter(|id| !kept.contains(id))
        .collect();
    Ok((out, AugmentTrace { dropped, ..trace_base }))
}
