//! Brute-force oracles and fixture helpers shared by the integration tests.
//! Nothing here calls the matching, rasterization or AP code under test.

#![allow(dead_code)]

use std::path::PathBuf;

use segeval::dataset::{parse_detections, parse_via, ClassRegistry, DatasetBundle, Detection, DEFAULT_ATTRIBUTE_KEY};
use segeval::geometry::{Point2, Polygon};
use segeval::rng::RngState;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load_bundle(name: &str) -> DatasetBundle {
    parse_via(&read_fixture(name), &ClassRegistry::rope_defects(), DEFAULT_ATTRIBUTE_KEY, None).unwrap()
}

pub fn load_dets(name: &str, b: &DatasetBundle) -> Vec<Detection> {
    parse_detections(&read_fixture(name), &b.registry).unwrap()
}

/// Even-odd point-in-polygon test at every pixel center (PNPOLY form).
pub fn pip_bitmap(p: &Polygon, w: u32, h: u32) -> Vec<bool> {
    let v = p.vertices();
    let n = v.len();
    let mut out = Vec::with_capacity((w * h) as usize);
    for i in 0..h {
        for j in 0..w {
            let (px, py) = (j as f64 + 0.5, i as f64 + 0.5);
            let mut inside = false;
            let mut k = n - 1;
            for m in 0..n {
                let (a, b) = (v[m], v[k]);
                if (a.y > py) != (b.y > py) && px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x {
                    inside = !inside;
                }
                k = m;
            }
            out.push(inside);
        }
    }
    out
}

pub fn bitmap_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count() as u64;
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count() as u64;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Simple polygon with 3 to 10 vertices, all inside `[pad, w - pad] x
/// [pad, h - pad]` (a negative pad lets vertices leave the frame). Vertices
/// sit at jittered angles in equal sectors around a center, so every angular
/// gap stays below a half turn and the polygon is star-shaped about it.
pub fn random_star(rng: &mut RngState, w: u32, h: u32, pad: f64) -> Polygon {
    let n = 3 + rng.below(8) as usize;
    let (w, h) = (w as f64, h as f64);
    let margin = 0.2 * (w - 2.0 * pad).min(h - 2.0 * pad);
    let cx = rng.uniform(pad + margin, w - pad - margin);
    let cy = rng.uniform(pad + margin, h - pad - margin);
    let room = (cx - pad).min(w - pad - cx).min(cy - pad).min(h - pad - cy);
    let r_max = room.max(0.5) * rng.uniform(0.4, 1.0);
    let phase = rng.uniform(0.0, std::f64::consts::TAU);
    let pts: Vec<Point2> = (0..n)
        .map(|k| {
            let a = phase + (k as f64 + 0.4 * rng.next_f64()) * std::f64::consts::TAU / n as f64;
            let r = rng.uniform(0.3, 1.0) * r_max;
            Point2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    Polygon::new(pts).expect("distinct angles give distinct vertices")
}

fn box_extents(p: &Polygon) -> (f64, f64, f64, f64) {
    let xs = p.xs();
    let ys = p.ys();
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min(&xs), min(&ys), max(&xs), max(&ys))
}

fn oracle_box_iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let iw = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let ih = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    let inter = iw * ih;
    let union = (a.2 - a.0) * (a.3 - a.1) + (b.2 - b.0) * (b.3 - b.1) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleKind {
    Box,
    Mask,
}

/// AP at one IoU threshold for one class, by naive re-matching and the
/// rectangle rule over the 101 recall points.
pub fn brute_force_ap(b: &DatasetBundle, dets: &[Detection], class_id: u32, thr: f64, kind: OracleKind) -> Option<f64> {
    let mut ranked: Vec<(f64, String, usize, bool)> = Vec::new();
    let mut n_gt = 0usize;
    for img in &b.images {
        let gts: Vec<&Polygon> = b
            .annotations
            .iter()
            .filter(|a| a.image_ref == img.file_name && a.class_id == class_id)
            .map(|a| &a.polygon)
            .collect();
        n_gt += gts.len();
        let mut mine: Vec<(usize, &Detection)> = dets
            .iter()
            .enumerate()
            .filter(|(_, d)| d.image_ref == img.file_name && d.class_id == class_id)
            .collect();
        mine.sort_by(|x, y| y.1.score.partial_cmp(&x.1.score).unwrap().then(x.0.cmp(&y.0)));
        let gt_bits: Vec<Vec<bool>> = match kind {
            OracleKind::Mask => gts.iter().map(|g| pip_bitmap(g, img.width, img.height)).collect(),
            OracleKind::Box => Vec::new(),
        };
        let mut taken = vec![false; gts.len()];
        for (idx, d) in mine {
            let iou_with = |g: usize| -> f64 {
                match kind {
                    OracleKind::Box => {
                        let de = match (&d.bbox, &d.polygon) {
                            (Some(bb), _) => (bb.x_min(), bb.y_min(), bb.x_max(), bb.y_max()),
                            (None, Some(p)) => box_extents(p),
                            _ => unreachable!(),
                        };
                        oracle_box_iou(de, box_extents(gts[g]))
                    }
                    OracleKind::Mask => {
                        let bits = pip_bitmap(d.polygon.as_ref().unwrap(), img.width, img.height);
                        bitmap_iou(&bits, &gt_bits[g])
                    }
                }
            };
            let mut best: Option<(usize, f64)> = None;
            for g in 0..gts.len() {
                if taken[g] {
                    continue;
                }
                let iou = iou_with(g);
                if iou >= thr && best.map_or(true, |(_, bi)| iou > bi) {
                    best = Some((g, iou));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            ranked.push((d.score, img.file_name.clone(), idx, best.is_some()));
        }
    }
    if n_gt == 0 {
        return None;
    }
    ranked.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut pr = Vec::new();
    let mut tp = 0usize;
    for (k, r) in ranked.iter().enumerate() {
        if r.3 {
            tp += 1;
        }
        pr.push((tp as f64 / n_gt as f64, tp as f64 / (k + 1) as f64));
    }
    let mut total = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let p = pr.iter().filter(|(rec, _)| *rec >= r).map(|(_, p)| *p).fold(0.0, f64::max);
        total += p;
    }
    Some(total / 101.0)
}
