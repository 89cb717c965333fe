use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::matching::{prepare_bundle, Prepared, RawVerdict};
use super::{EvaluationError, IouKind, Result};
use crate::dataset::{DatasetBundle, Detection};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

pub(crate) fn counts_from_prepared(prepared: &[Prepared], iou_thr: f64, min_score: f64) -> Counts {
    let mut c = Counts::default();
    for p in prepared {
        let raw = p.greedy(iou_thr, None, min_score);
        for v in raw.det.iter().flatten() {
            match v {
                RawVerdict::Tp(_) => c.tp += 1,
                RawVerdict::Fp => c.fp += 1,
                RawVerdict::Ignored => {}
            }
        }
        c.fn_ += raw.gt.iter().filter(|g| **g == super::GtVerdict::Missed).count();
    }
    c
}

/// Instance-level counts after discarding detections scoring below
/// `score_thr`. A ground truth nobody claims at `iou_thr` is a miss.
pub fn fp_fn_counts(
    bundle: &DatasetBundle,
    dets: &[Detection],
    score_thr: f64,
    iou_thr: f64,
    kind: IouKind,
) -> Result<Counts> {
    let prepared = prepare_bundle(bundle, dets, kind)?;
    Ok(counts_from_prepared(&prepared, iou_thr, score_thr))
}

/// Counts at each score threshold of an ascending grid.
pub fn threshold_sweep(
    bundle: &DatasetBundle,
    dets: &[Detection],
    iou_thr: f64,
    kind: IouKind,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if grid.iter().any(|t| t.is_nan()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvaluationError::InvalidConfig(
            "score grid must be ascending".into(),
        ));
    }
    let prepared = prepare_bundle(bundle, dets, kind)?;
    Ok(grid
        .iter()
        .map(|&tau| {
            let c = counts_from_prepared(&prepared, iou_thr, tau);
            SweepPoint {
                tau,
                fp: c.fp,
                fn_: c.fn_,
                tp: c.tp,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAccuracy {
    pub correct: usize,
    pub total: usize,
}

impl ImageAccuracy {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Per-image defective/clean agreement. An image is predicted defective
/// when any defect-class detection scores at least `tau`, and is truly
/// defective when it holds a defect-class annotation. Detections on images
/// outside the bundle are ignored.
pub fn image_level_accuracy(bundle: &DatasetBundle, dets: &[Detection], tau: f64) -> ImageAccuracy {
    let reg = &bundle.registry;
    let truth: HashSet<&str> = bundle
        .annotations
        .iter()
        .filter(|a| reg.is_defect(a.class_id))
        .map(|a| a.image_ref.as_str())
        .collect();
    let predicted: HashSet<&str> = dets
        .iter()
        .filter(|d| d.score >= tau && reg.is_defect(d.class_id))
        .map(|d| d.image_ref.as_str())
        .collect();
    let correct = bundle
        .images
        .iter()
        .filter(|img| {
            let n = img.file_name.as_str();
            truth.contains(n) == predicted.contains(n)
        })
        .count();
    ImageAccuracy {
        correct,
        total: bundle.images.len(),
    }
}
