use rayon::prelude::*;
use serde::Serialize;

use super::{AreaRange, EvaluationError, IouKind, Result};
use crate::dataset::{DatasetBundle, Detection, GroundTruthAnnotation, ImageRecord};
use crate::geometry::{extents_iou, mask_iou, rasterize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TruePositive { gt_stable_id: u64 },
    FalsePositive,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GtVerdict {
    Matched,
    Missed,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionOutcome {
    /// Position in the prediction input; the score tie-break.
    pub index: usize,
    pub class_id: u32,
    pub score: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthOutcome {
    pub stable_id: u64,
    pub class_id: u32,
    pub verdict: GtVerdict,
}

/// Matching result for one image at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchOutcome {
    pub image: String,
    /// In input order.
    pub detections: Vec<DetectionOutcome>,
    pub ground_truths: Vec<GroundTruthOutcome>,
    /// Positions into `detections`, in the order they were matched.
    pub ranking: Vec<usize>,
}

/// Per-instance footprints and pairwise IoUs of one image for one kind.
/// Computed once and reused across thresholds and area ranges.
pub(crate) struct Prepared {
    pub image: String,
    pub gt_class: Vec<u32>,
    pub gt_id: Vec<u64>,
    pub gt_area: Vec<f64>,
    pub det_class: Vec<u32>,
    pub det_score: Vec<f64>,
    pub det_index: Vec<usize>,
    pub det_area: Vec<f64>,
    /// Row-major `[det][gt]`; zero across classes.
    ious: Vec<f64>,
    /// Detection positions by descending score, ties by input index.
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawVerdict {
    Tp(usize),
    Fp,
    Ignored,
}

pub(crate) struct RawMatch {
    /// `None` for detections below the score floor.
    pub det: Vec<Option<RawVerdict>>,
    pub gt: Vec<GtVerdict>,
}

fn det_extents(d: &Detection) -> [f64; 4] {
    match (&d.bbox, &d.polygon) {
        (Some(b), _) => b.extents(),
        (None, Some(p)) => p.extents(),
        (None, None) => [0.0; 4],
    }
}

fn box_area(e: &[f64; 4]) -> f64 {
    (e[2] - e[0]).max(0.0) * (e[3] - e[1]).max(0.0)
}

impl Prepared {
    pub fn new(
        image: &ImageRecord,
        gts: &[&GroundTruthAnnotation],
        dets: &[(usize, &Detection)],
        kind: IouKind,
    ) -> Result<Self> {
        let ng = gts.len();
        let nd = dets.len();
        let mut ious = vec![0.0; nd * ng];
        let (gt_area, det_area);
        match kind {
            IouKind::Box => {
                let ge: Vec<[f64; 4]> = gts.iter().map(|g| g.polygon.extents()).collect();
                let de: Vec<[f64; 4]> = dets.iter().map(|(_, d)| det_extents(d)).collect();
                for (i, (_, d)) in dets.iter().enumerate() {
                    for (j, g) in gts.iter().enumerate() {
                        if d.class_id == g.class_id {
                            ious[i * ng + j] = extents_iou(&de[i], &ge[j]);
                        }
                    }
                }
                gt_area = ge.iter().map(box_area).collect();
                det_area = de.iter().map(box_area).collect();
            }
            IouKind::Mask => {
                let (w, h) = (image.width, image.height);
                let gm: Vec<_> = gts.iter().map(|g| rasterize(&g.polygon, w, h)).collect();
                let mut dm = Vec::with_capacity(nd);
                for (index, d) in dets {
                    let p = d.polygon.as_ref().ok_or_else(|| EvaluationError::MissingPolygon {
                        index: *index,
                        image: image.file_name.clone(),
                    })?;
                    dm.push(rasterize(p, w, h));
                }
                for (i, (_, d)) in dets.iter().enumerate() {
                    for (j, g) in gts.iter().enumerate() {
                        if d.class_id == g.class_id {
                            ious[i * ng + j] = mask_iou(&dm[i], &gm[j])?;
                        }
                    }
                }
                gt_area = gm.iter().map(|m| m.pixel_count() as f64).collect();
                det_area = dm.iter().map(|m| m.pixel_count() as f64).collect();
            }
        }
        let det_score: Vec<f64> = dets.iter().map(|(_, d)| d.score).collect();
        let det_index: Vec<usize> = dets.iter().map(|(i, _)| *i).collect();
        let mut ranking: Vec<usize> = (0..nd).collect();
        ranking.sort_by(|&a, &b| {
            det_score[b]
                .total_cmp(&det_score[a])
                .then(det_index[a].cmp(&det_index[b]))
        });
        Ok(Self {
            image: image.file_name.clone(),
            gt_class: gts.iter().map(|g| g.class_id).collect(),
            gt_id: gts.iter().map(|g| g.stable_id).collect(),
            gt_area,
            det_class: dets.iter().map(|(_, d)| d.class_id).collect(),
            det_score,
            det_index,
            det_area,
            ious,
            ranking,
        })
    }

    pub fn iou(&self, det: usize, gt: usize) -> f64 {
        self.ious[det * self.gt_class.len() + gt]
    }

    /// Greedy matching at `thr`. With a `range`, ground truths outside it
    /// are ignored, a detection landing on one is ignored, and an unmatched
    /// detection outside the range is ignored instead of counted as FP.
    /// Detections scoring below `min_score` take no part.
    pub fn greedy(&self, thr: f64, range: Option<&AreaRange>, min_score: f64) -> RawMatch {
        let ng = self.gt_class.len();
        let gt_ignored: Vec<bool> = match range {
            Some(r) => self.gt_area.iter().map(|&a| !r.contains(a)).collect(),
            None => vec![false; ng],
        };
        let mut claimed = vec![false; ng];
        let mut det = vec![None; self.det_class.len()];
        for &d in &self.ranking {
            if self.det_score[d] < min_score {
                continue;
            }
            // best non-ignored candidate first, ignored ones only as fallback
            let mut best: [Option<(usize, f64)>; 2] = [None, None];
            for g in 0..ng {
                if claimed[g] || self.gt_class[g] != self.det_class[d] {
                    continue;
                }
                let iou = self.iou(d, g);
                if iou < thr {
                    continue;
                }
                let slot = &mut best[gt_ignored[g] as usize];
                if slot.is_none_or(|(_, b)| iou > b) {
                    *slot = Some((g, iou));
                }
            }
            det[d] = Some(match best[0].or(best[1]) {
                Some((g, _)) => {
                    claimed[g] = true;
                    if gt_ignored[g] {
                        RawVerdict::Ignored
                    } else {
                        RawVerdict::Tp(g)
                    }
                }
                None => match range {
                    Some(r) if !r.contains(self.det_area[d]) => RawVerdict::Ignored,
                    _ => RawVerdict::Fp,
                },
            });
        }
        let gt = (0..ng)
            .map(|g| {
                if gt_ignored[g] {
                    GtVerdict::Ignored
                } else if claimed[g] {
                    GtVerdict::Matched
                } else {
                    GtVerdict::Missed
                }
            })
            .collect();
        RawMatch { det, gt }
    }

    pub fn outcome(&self, raw: &RawMatch) -> MatchOutcome {
        let detections = (0..self.det_class.len())
            .filter_map(|d| {
                let v = raw.det[d]?;
                Some(DetectionOutcome {
                    index: self.det_index[d],
                    class_id: self.det_class[d],
                    score: self.det_score[d],
                    verdict: match v {
                        RawVerdict::Tp(g) => Verdict::TruePositive {
                            gt_stable_id: self.gt_id[g],
                        },
                        RawVerdict::Fp => Verdict::FalsePositive,
                        RawVerdict::Ignored => Verdict::Ignored,
                    },
                })
            })
            .collect::<Vec<_>>();
        // ranking expressed as positions within the kept detections
        let mut pos = vec![None; self.det_class.len()];
        let mut next = 0;
        for (d, slot) in pos.iter_mut().enumerate() {
            if raw.det[d].is_some() {
                *slot = Some(next);
                next += 1;
            }
        }
        let ranking = self.ranking.iter().filter_map(|&d| pos[d]).collect();
        MatchOutcome {
            image: self.image.clone(),
            detections,
            ground_truths: (0..self.gt_class.len())
                .map(|g| GroundTruthOutcome {
                    stable_id: self.gt_id[g],
                    class_id: self.gt_class[g],
                    verdict: raw.gt[g],
                })
                .collect(),
            ranking,
        }
    }
}

/// Checks image references and prepares every image of the bundle, in
/// bundle order, on the current worker pool.
pub(crate) fn prepare_bundle(
    bundle: &DatasetBundle,
    dets: &[Detection],
    kind: IouKind,
) -> Result<Vec<Prepared>> {
    let index = bundle.image_index();
    let mut per_image: Vec<Vec<(usize, &Detection)>> = vec![Vec::new(); bundle.images.len()];
    for (i, d) in dets.iter().enumerate() {
        let slot = index
            .get(d.image_ref.as_str())
            .ok_or_else(|| EvaluationError::UnknownImage {
                index: i,
                image: d.image_ref.clone(),
            })?;
        per_image[*slot].push((i, d));
    }
    let gts = bundle.annotations_by_image();
    bundle
        .images
        .par_iter()
        .zip(gts.par_iter())
        .zip(per_image.par_iter())
        .map(|((img, g), d)| Prepared::new(img, g, d, kind))
        .collect()
}

fn prepare_slices(
    image: &ImageRecord,
    gts: &[GroundTruthAnnotation],
    dets: &[Detection],
    kind: IouKind,
) -> Result<Prepared> {
    let g: Vec<&GroundTruthAnnotation> = gts.iter().collect();
    let d: Vec<(usize, &Detection)> = dets.iter().enumerate().collect();
    Prepared::new(image, &g, &d, kind)
}

/// Matches one image's detections to its ground truths at `iou_thr`.
/// Masks are rasterized in the image's frame.
pub fn match_image(
    image: &ImageRecord,
    gts: &[GroundTruthAnnotation],
    dets: &[Detection],
    iou_thr: f64,
    kind: IouKind,
) -> Result<MatchOutcome> {
    let p = prepare_slices(image, gts, dets, kind)?;
    Ok(p.outcome(&p.greedy(iou_thr, None, f64::NEG_INFINITY)))
}

/// [`match_image`] restricted to an area stratum.
pub fn match_image_in_range(
    image: &ImageRecord,
    gts: &[GroundTruthAnnotation],
    dets: &[Detection],
    iou_thr: f64,
    kind: IouKind,
    range: &AreaRange,
) -> Result<MatchOutcome> {
    let p = prepare_slices(image, gts, dets, kind)?;
    Ok(p.outcome(&p.greedy(iou_thr, Some(range), f64::NEG_INFINITY)))
}

/// Area-based marks for one stratum. Areas are box areas for the box kind
/// and rasterized pixel counts for the mask kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumMarks {
    pub gt_area: Vec<f64>,
    pub det_area: Vec<f64>,
    /// Ground truths outside the range; never counted in `n_gt`.
    pub gt_ignored: Vec<bool>,
    /// Detections whose own area is outside the range; ignored when they
    /// stay unmatched.
    pub det_outside: Vec<bool>,
}

pub fn size_stratified_filter(
    image: &ImageRecord,
    gts: &[GroundTruthAnnotation],
    dets: &[Detection],
    range: &AreaRange,
    kind: IouKind,
) -> Result<StratumMarks> {
    let p = prepare_slices(image, gts, dets, kind)?;
    Ok(StratumMarks {
        gt_ignored: p.gt_area.iter().map(|&a| !range.contains(a)).collect(),
        det_outside: p.det_area.iter().map(|&a| !range.contains(a)).collect(),
        gt_area: p.gt_area,
        det_area: p.det_area,
    })
}
