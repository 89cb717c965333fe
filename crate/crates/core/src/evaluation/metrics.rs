use serde::Serialize;

use super::matching::{GtVerdict, MatchOutcome, Verdict};

/// Cumulative precision/recall points in ranking order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PRCurve {
    /// `(recall, precision)`.
    pub points: Vec<(f64, f64)>,
    pub n_gt: usize,
    pub n_det: usize,
}

impl PRCurve {
    /// A curve without ground truth has no AP.
    pub fn is_defined(&self) -> bool {
        self.n_gt > 0
    }
}

/// Builds the class's PR curve from per-image outcomes at one threshold.
///
/// Detections are ranked globally by score (descending), then image name,
/// then input index. Ignored detections and ground truths do not count.
pub fn accumulate_pr(outcomes: &[MatchOutcome], class_id: u32) -> PRCurve {
    let mut ranked: Vec<(f64, &str, usize, bool)> = Vec::new();
    let mut n_gt = 0;
    for o in outcomes {
        n_gt += o
            .ground_truths
            .iter()
            .filter(|g| g.class_id == class_id && g.verdict != GtVerdict::Ignored)
            .count();
        for d in o.detections.iter().filter(|d| d.class_id == class_id) {
            match d.verdict {
                Verdict::Ignored => {}
                Verdict::TruePositive { .. } => ranked.push((d.score, &o.image, d.index, true)),
                Verdict::FalsePositive => ranked.push((d.score, &o.image, d.index, false)),
            }
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
    curve_from_ranked(ranked.iter().map(|r| r.3), n_gt)
}

pub(crate) fn curve_from_ranked(is_tp: impl Iterator<Item = bool>, n_gt: usize) -> PRCurve {
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut seen = 0usize;
    for hit in is_tp {
        seen += 1;
        tp += hit as usize;
        if n_gt > 0 {
            points.push((tp as f64 / n_gt as f64, tp as f64 / seen as f64));
        }
    }
    PRCurve {
        points,
        n_gt,
        n_det: seen,
    }
}

/// 101-point interpolated AP: the mean over `r = 0.00, 0.01, ..., 1.00` of
/// the best precision at recall `>= r` (0 when recall `r` is never reached).
/// `None` when the curve has no ground truth.
pub fn average_precision(curve: &PRCurve) -> Option<f64> {
    if !curve.is_defined() {
        return None;
    }
    let recall: Vec<f64> = curve.points.iter().map(|p| p.0).collect();
    let mut envelope: Vec<f64> = curve.points.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let i = recall.partition_point(|&x| x < r);
        if let Some(p) = envelope.get(i) {
            sum += p;
        }
    }
    Some(sum / 101.0)
}
