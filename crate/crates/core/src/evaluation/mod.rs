//! Detection-to-ground-truth matching and the average-precision suite.
//!
//! Matching is greedy and class-aware: detections are visited by descending
//! score (ties by input order) and each claims the unclaimed ground truth of
//! its class with the highest IoU, provided the IoU reaches the threshold.
//! AP is 101-point interpolated; the headline AP column averages the ten
//! IoU thresholds 0.50, 0.55, ..., 0.95.

mod counts;
mod matching;
mod metrics;
mod report;

pub use counts::{fp_fn_counts, image_level_accuracy, threshold_sweep, Counts, ImageAccuracy, SweepPoint};
pub use matching::{
    match_image, match_image_in_range, size_stratified_filter, DetectionOutcome, GroundTruthOutcome,
    GtVerdict, MatchOutcome, StratumMarks, Verdict,
};
pub use metrics::{accumulate_pr, average_precision, PRCurve};
pub use report::{evaluate, evaluate_with_curves, ClassCurve, EvaluationReport, KindCounts, KindReport, ReportMetadata, ReportRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("detection {index} references unknown image {image:?}")]
    UnknownImage { index: usize, image: String },
    #[error("detection {index} on image {image:?} has no polygon; mask IoU needs one")]
    MissingPolygon { index: usize, image: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, EvaluationError>;

/// Footprint compared by IoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IouKind {
    /// Axis-aligned boxes.
    #[serde(rename = "box")]
    Box,
    /// Rasterized polygons.
    #[serde(rename = "segm")]
    Mask,
}

impl IouKind {
    /// Row label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            IouKind::Box => "Box",
            IouKind::Mask => "Segm",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            IouKind::Box => "box",
            IouKind::Mask => "segm",
        }
    }
}

/// Which kinds `evaluate` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSelection {
    Box,
    Mask,
    /// Box always; mask when every detection carries a polygon.
    Both,
}

/// Half-open area interval `[min, max)` in px².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRange {
    pub label: String,
    pub min: f64,
    /// Infinite for an open range; serialized as `null`.
    #[serde(with = "unbounded")]
    pub max: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl AreaRange {
    pub fn new(label: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            label: label.into(),
            min,
            max,
        }
    }

    pub fn all() -> Self {
        Self::new("all", 0.0, f64::INFINITY)
    }

    pub fn medium() -> Self {
        Self::new("medium", 32.0 * 32.0, 96.0 * 96.0)
    }

    pub fn large() -> Self {
        Self::new("large", 96.0 * 96.0, f64::INFINITY)
    }

    pub fn small() -> Self {
        Self::new("small", 0.0, 32.0 * 32.0)
    }

    pub fn contains(&self, area: f64) -> bool {
        area >= self.min && area < self.max
    }

    /// Report column name: `AP_m`, `AP_l`, `AP_s`, or `AP_<label>`.
    pub fn column(&self) -> String {
        match self.label.as_str() {
            "medium" => "AP_m".into(),
            "large" => "AP_l".into(),
            "small" => "AP_s".into(),
            other => format!("AP_{other}"),
        }
    }
}

/// IoU thresholds averaged into the headline AP column.
pub fn iou_grid() -> Vec<f64> {
    (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Extra per-threshold AP columns, ascending.
    pub iou_thresholds: Vec<f64>,
    pub iou_kind: KindSelection,
    /// Used for the FP/FN summary and image-level accuracy; AP always
    /// ranks every detection.
    pub score_threshold: f64,
    pub area_ranges: Vec<AreaRange>,
    /// Count classes flagged as non-defect in the class-mean rows.
    pub include_non_defect: bool,
    /// Worker cap; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.50, 0.75],
            iou_kind: KindSelection::Both,
            score_threshold: 0.70,
            area_ranges: vec![AreaRange::medium(), AreaRange::large()],
            include_non_defect: false,
            threads: None,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EvaluationError::InvalidConfig(m));
        for &t in &self.iou_thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("IoU threshold {t} outside (0, 1]"));
            }
        }
        if self.iou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return bad("IoU thresholds must be strictly ascending".into());
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad(format!("score threshold {} outside [0, 1]", self.score_threshold));
        }
        for r in &self.area_ranges {
            if r.min.is_nan() || r.max.is_nan() || r.min < 0.0 || r.max <= r.min {
                return bad(format!("area range {:?} is empty or negative", r.label));
            }
        }
        let find = |l: &str| self.area_ranges.iter().find(|r| r.label == l);
        if let (Some(m), Some(l)) = (find("medium"), find("large")) {
            if m.min < l.max && l.min < m.max {
                return bad("medium and large area ranges overlap".into());
            }
        }
        if self.threads == Some(0) {
            return bad("worker count must be positive".into());
        }
        Ok(())
    }
}

/// Runs `f` on a pool capped at `threads` workers, or on the global pool.
pub(crate) fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| EvaluationError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
