use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::{counts_from_prepared, image_level_accuracy, Counts, ImageAccuracy};
use super::matching::{prepare_bundle, Prepared, RawVerdict};
use super::metrics::{average_precision, curve_from_ranked, PRCurve};
use super::{iou_grid, with_workers, AreaRange, IouKind, KindSelection, MatchConfig, Result};
use crate::dataset::{DatasetBundle, Detection};

/// One table row. `values` line up with [`EvaluationReport::columns`];
/// `None` marks an undefined cell (no ground truth in the stratum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Class name, or `"mean"`.
    pub scope: String,
    pub class_id: Option<u32>,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: IouKind,
    pub mean: ReportRow,
    pub classes: Vec<ReportRow>,
}

/// FP/FN/TP at the configured score threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindCounts {
    pub kind: IouKind,
    pub iou_threshold: f64,
    pub score_threshold: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub iou_grid: Vec<f64>,
    pub iou_thresholds: Vec<f64>,
    pub area_ranges: Vec<AreaRange>,
    pub score_threshold: f64,
    pub include_non_defect: bool,
    pub n_images: usize,
    pub n_annotations: usize,
    pub n_detections: usize,
    pub n_classes: usize,
    pub interpolation_points: usize,
    pub tie_break: String,
    pub area_resolution: String,
    /// Kinds requested but not evaluated, with the reason.
    pub skipped_kinds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `AP`, one `AP<t>` per report threshold, one column per area range.
    pub columns: Vec<String>,
    pub kinds: Vec<KindReport>,
    pub counts: Vec<KindCounts>,
    pub image_accuracy: ImageAccuracy,
    pub metadata: ReportMetadata,
}

impl EvaluationReport {
    pub fn kind(&self, kind: IouKind) -> Option<&KindReport> {
        self.kinds.iter().find(|k| k.kind == kind)
    }

    /// Looks up a cell by kind, class name (or `"mean"`) and column.
    pub fn value(&self, kind: IouKind, scope: &str, column: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c == column)?;
        let k = self.kind(kind)?;
        let row = if scope == k.mean.scope {
            &k.mean
        } else {
            k.classes.iter().find(|r| r.scope == scope)?
        };
        row.values[col]
    }
}

/// PR curve of one class at one report threshold over all areas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCurve {
    pub kind: IouKind,
    pub class_id: u32,
    pub class_name: String,
    pub iou_threshold: f64,
    pub curve: PRCurve,
}

/// Column label for a report threshold, e.g. `AP50`.
pub(crate) fn threshold_column(t: f64) -> String {
    let pct = t * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("AP{}", pct.round() as i64)
    } else {
        format!("AP{pct}")
    }
}

/// Computes the AP suite, FP/FN counts and image-level accuracy.
pub fn evaluate(bundle: &DatasetBundle, dets: &[Detection], cfg: &MatchConfig) -> Result<EvaluationReport> {
    evaluate_with_curves(bundle, dets, cfg).map(|(r, _)| r)
}

/// [`evaluate`], also returning the PR curves behind the per-threshold
/// columns.
pub fn evaluate_with_curves(
    bundle: &DatasetBundle,
    dets: &[Detection],
    cfg: &MatchConfig,
) -> Result<(EvaluationReport, Vec<ClassCurve>)> {
    cfg.validate()?;
    with_workers(cfg.threads, || evaluate_inner(bundle, dets, cfg))?
}

fn evaluate_inner(
    bundle: &DatasetBundle,
    dets: &[Detection],
    cfg: &MatchConfig,
) -> Result<(EvaluationReport, Vec<ClassCurve>)> {
    let mut kinds = Vec::new();
    let mut skipped_kinds = Vec::new();
    match cfg.iou_kind {
        KindSelection::Box => kinds.push(IouKind::Box),
        KindSelection::Mask => kinds.push(IouKind::Mask),
        KindSelection::Both => {
            kinds.push(IouKind::Box);
            match dets.iter().position(|d| d.polygon.is_none()) {
                None => kinds.push(IouKind::Mask),
                Some(i) => skipped_kinds.push(format!("segm: detection {i} has no polygon")),
            }
        }
    }

    let grid = iou_grid();
    let mut thresholds = grid.clone();
    for &t in &cfg.iou_thresholds {
        if !thresholds.contains(&t) {
            thresholds.push(t);
        }
    }
    let mut ranges: Vec<Option<&AreaRange>> = vec![None];
    ranges.extend(cfg.area_ranges.iter().map(Some));

    let classes = bundle.registry.entries();
    let mut columns = vec!["AP".to_string()];
    columns.extend(cfg.iou_thresholds.iter().map(|&t| threshold_column(t)));
    columns.extend(cfg.area_ranges.iter().map(AreaRange::column));

    let mut kind_reports = Vec::new();
    let mut counts = Vec::new();
    let mut curves = Vec::new();
    for &kind in &kinds {
        let prepared = prepare_bundle(bundle, dets, kind)?;
        // ap[threshold][range][class]
        let mut ap = vec![vec![vec![None; classes.len()]; ranges.len()]; thresholds.len()];
        for (ti, &t) in thresholds.iter().enumerate() {
            for (ri, range) in ranges.iter().enumerate() {
                let per_class = class_curves(&prepared, t, *range, classes.len());
                for (ci, curve) in per_class.into_iter().enumerate() {
                    ap[ti][ri][ci] = average_precision(&curve);
                    if ri == 0 && cfg.iou_thresholds.contains(&t) {
                        curves.push(ClassCurve {
                            kind,
                            class_id: classes[ci].id,
                            class_name: classes[ci].name.clone(),
                            iou_threshold: t,
                            curve,
                        });
                    }
                }
            }
        }
        let grid_mean = |ri: usize, ci: usize| -> Option<f64> {
            let v: Vec<f64> = (0..grid.len()).filter_map(|ti| ap[ti][ri][ci]).collect();
            // a class's strata are defined for all grid thresholds or none
            (v.len() == grid.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let rows: Vec<ReportRow> = classes
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                let mut values = vec![grid_mean(0, ci)];
                for &t in &cfg.iou_thresholds {
                    let ti = thresholds.iter().position(|&x| x == t).unwrap_or(0);
                    values.push(ap[ti][0][ci]);
                }
                values.extend((1..ranges.len()).map(|ri| grid_mean(ri, ci)));
                ReportRow {
                    scope: c.name.clone(),
                    class_id: Some(c.id),
                    values,
                }
            })
            .collect();
        let in_mean: Vec<&ReportRow> = rows
            .iter()
            .zip(classes)
            .filter(|(_, c)| c.is_defect || cfg.include_non_defect)
            .map(|(r, _)| r)
            .collect();
        let mean = ReportRow {
            scope: "mean".into(),
            class_id: None,
            values: (0..columns.len())
                .map(|col| {
                    let v: Vec<f64> = in_mean.iter().filter_map(|r| r.values[col]).collect();
                    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect(),
        };
        kind_reports.push(KindReport {
            kind,
            mean,
            classes: rows,
        });
        counts.push(KindCounts {
            kind,
            iou_threshold: 0.5,
            score_threshold: cfg.score_threshold,
            counts: counts_from_prepared(&prepared, 0.5, cfg.score_threshold),
        });
    }

    let metadata = ReportMetadata {
        iou_grid: grid,
        iou_thresholds: cfg.iou_thresholds.clone(),
        area_ranges: cfg.area_ranges.clone(),
        score_threshold: cfg.score_threshold,
        include_non_defect: cfg.include_non_defect,
        n_images: bundle.images.len(),
        n_annotations: bundle.annotations.len(),
        n_detections: dets.len(),
        n_classes: classes.len(),
        interpolation_points: 101,
        tie_break: "score descending, then prediction input order; across images by file name".into(),
        area_resolution: "native annotation resolution (image frame from the dataset)".into(),
        skipped_kinds,
    };
    let report = EvaluationReport {
        columns,
        kinds: kind_reports,
        counts,
        image_accuracy: image_level_accuracy(bundle, dets, cfg.score_threshold),
        metadata,
    };
    Ok((report, curves))
}

/// One PR curve per class position, matching every image at `thr` and
/// ranking globally by score, image name, then input index.
fn class_curves(prepared: &[Prepared], thr: f64, range: Option<&AreaRange>, n_classes: usize) -> Vec<PRCurve> {
    let raws: Vec<_> = prepared.par_iter().map(|p| p.greedy(thr, range, f64::NEG_INFINITY)).collect();
    let mut ranked: Vec<Vec<(f64, &str, usize, bool)>> = vec![Vec::new(); n_classes];
    let mut n_gt = vec![0usize; n_classes];
    for (p, raw) in prepared.iter().zip(&raws) {
        for (g, v) in raw.gt.iter().enumerate() {
            let c = p.gt_class[g] as usize;
            if c < n_classes && *v != super::GtVerdict::Ignored {
                n_gt[c] += 1;
            }
        }
        for (d, v) in raw.det.iter().enumerate() {
            let c = p.det_class[d] as usize;
            let hit = match v {
                Some(RawVerdict::Tp(_)) => true,
                Some(RawVerdict::Fp) => false,
                _ => continue,
            };
            if c < n_classes {
                ranked[c].push((p.det_score[d], p.image.as_str(), p.det_index[d], hit));
            }
        }
    }
    ranked
        .into_iter()
        .zip(n_gt)
        .map(|(mut r, n)| {
            r.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
            curve_from_ranked(r.into_iter().map(|x| x.3), n)
        })
        .collect()
}
