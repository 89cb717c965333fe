use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{DatasetBundle, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    DuplicateImage,
    InvalidImageSize,
    DuplicateStableId,
    DanglingImageRef,
    UnknownClass,
    TooFewVertices,
    OutsideFrame,
    SelfIntersecting,
    ZeroArea,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

/// Slack allowed for vertices past the frame edge, in px.
const FRAME_TOLERANCE: f64 = 1.0;

/// Checks a bundle. Issues are data; an empty list means clean.
pub fn validate(b: &DatasetBundle) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut push = |severity, kind, location: String, message: String| {
        issues.push(Issue {
            severity,
            kind,
            location,
            message,
        })
    };

    let mut names = HashSet::new();
    for img in &b.images {
        let loc = format!("image {:?}", img.file_name);
        if !names.insert(img.file_name.as_str()) {
            push(Severity::Error, IssueKind::DuplicateImage, loc.clone(), "file name listed twice".into());
        }
        if img.width == 0 || img.height == 0 {
            push(
                Severity::Error,
                IssueKind::InvalidImageSize,
                loc,
                format!("frame {}x{} has no pixels", img.width, img.height),
            );
        }
    }

    let mut ids = HashSet::new();
    for (i, a) in b.annotations.iter().enumerate() {
        let loc = format!("annotation {} (id {}, image {:?})", i, a.stable_id, a.image_ref);
        if !ids.insert(a.stable_id) {
            push(Severity::Error, IssueKind::DuplicateStableId, loc.clone(), "stable id reused".into());
        }
        if b.registry.get(a.class_id).is_none() {
            push(
                Severity::Error,
                IssueKind::UnknownClass,
                loc.clone(),
                format!("class id {} is not in the registry", a.class_id),
            );
        }
        if a.polygon.len() < 3 {
            push(
                Severity::Error,
                IssueKind::TooFewVertices,
                loc.clone(),
                format!("polygon has {} vertices", a.polygon.len()),
            );
        }
        match b.image(&a.image_ref) {
            None => push(
                Severity::Error,
                IssueKind::DanglingImageRef,
                loc.clone(),
                format!("image {:?} is not in the bundle", a.image_ref),
            ),
            Some(img) => {
                let (w, h) = (img.width as f64, img.height as f64);
                let outside = a.polygon.vertices().iter().position(|v| {
                    v.x < -FRAME_TOLERANCE
                        || v.y < -FRAME_TOLERANCE
                        || v.x > w + FRAME_TOLERANCE
                        || v.y > h + FRAME_TOLERANCE
                });
                if let Some(k) = outside {
                    let v = a.polygon.vertices()[k];
                    push(
                        Severity::Error,
                        IssueKind::OutsideFrame,
                        loc.clone(),
                        format!(
                            "vertex {k} at ({}, {}) lies more than {FRAME_TOLERANCE} px outside the {}x{} frame",
                            v.x, v.y, img.width, img.height
                        ),
                    );
                }
            }
        }
        if a.polygon.self_intersects() {
            push(Severity::Warning, IssueKind::SelfIntersecting, loc.clone(), "polygon crosses itself".into());
        }
        if a.polygon.area() == 0.0 {
            push(Severity::Warning, IssueKind::ZeroArea, loc, "polygon has zero area".into());
        }
    }
    issues
}

/// [`validate`], plus one dangling-reference error per annotation whose
/// image the manifest does not list. The manifest is taken as the list of
/// images that exist on disk.
pub fn validate_with_manifest(b: &DatasetBundle, manifest: &Manifest) -> Vec<Issue> {
    let mut issues = validate(b);
    for (i, a) in b.annotations.iter().enumerate() {
        if manifest.get(&a.image_ref).is_none() {
            issues.push(Issue {
                severity: Severity::Error,
                kind: IssueKind::DanglingImageRef,
                location: format!("annotation {} (id {}, image {:?})", i, a.stable_id, a.image_ref),
                message: format!("image {:?} is not listed in the manifest", a.image_ref),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClassRegistry, GroundTruthAnnotation, ImageRecord};
    use crate::geometry::{Point2, Polygon};

    fn bundle_with(polys: Vec<(&str, Polygon)>) -> DatasetBundle {
        let mut b = DatasetBundle::new(ClassRegistry::default());
        b.images.push(ImageRecord {
            file_name: "a.png".into(),
            width: 10,
            height: 10,
            file_size: 0,
        });
        for (i, (img, p)) in polys.into_iter().enumerate() {
            b.annotations.push(GroundTruthAnnotation {
                image_ref: img.into(),
                class_id: 0,
                polygon: p,
                stable_id: i as u64,
            });
        }
        b
    }

    fn poly(pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    /// Brute-force check over every non-adjacent edge pair using exact
    /// parametric intersection.
    fn crossing_pairs(p: &Polygon) -> usize {
        let v = p.vertices();
        let n = v.len();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (v[i], v[(i + 1) % n]);
                let (c, d) = (v[j], v[(j + 1) % n]);
                let den = (b.x - a.x) * (d.y - c.y) - (b.y - a.y) * (d.x - c.x);
                if den == 0.0 {
                    continue;
                }
                let t = ((c.x - a.x) * (d.y - c.y) - (c.y - a.y) * (d.x - c.x)) / den;
                let u = ((c.x - a.x) * (b.y - a.y) - (c.y - a.y) * (b.x - a.x)) / den;
                if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn clean_bundle_has_no_issues() {
        let b = bundle_with(vec![("a.png", poly(&[(1.0, 1.0), (5.0, 1.0), (5.0, 5.0)]))]);
        assert!(validate(&b).is_empty());
    }

    #[test]
    fn dangling_image_reference() {
        let b = bundle_with(vec![("missing.png", poly(&[(1.0, 1.0), (5.0, 1.0), (5.0, 5.0)]))]);
        let issues = validate(&b);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Error);
        assert_eq!(issues[0].kind, IssueKind::DanglingImageRef);
    }

    #[test]
    fn manifest_defines_existing_images() {
        let b = bundle_with(vec![("a.png", poly(&[(1.0, 1.0), (5.0, 1.0), (5.0, 5.0)]))]);
        let mut m = Manifest::default();
        m.insert("b.png", 10, 10);
        let issues = validate_with_manifest(&b, &m);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::DanglingImageRef);
        m.insert("a.png", 10, 10);
        assert!(validate_with_manifest(&b, &m).is_empty());
    }

    #[test]
    fn bow_tie_is_one_warning() {
        let bow = poly(&[(0.0, 0.0), (4.0, 4.0), (4.0, 0.0), (0.0, 1.0)]);
        assert_eq!(crossing_pairs(&bow), 1);
        assert!(bow.area() > 0.0);
        let issues = validate(&bundle_with(vec![("a.png", bow)]));
        assert_eq!(issues.len(), 1, "{issues:?}");
        assert_eq!(issues[0].severity, Severity::Warning);
        assert_eq!(issues[0].kind, IssueKind::SelfIntersecting);
    }

    #[test]
    fn frame_tolerance_and_zero_area() {
        let within = poly(&[(-1.0, 0.0), (11.0, 0.0), (11.0, 10.5)]);
        assert!(validate(&bundle_with(vec![("a.png", within)])).is_empty());
        let beyond = poly(&[(0.0, 0.0), (11.5, 0.0), (5.0, 5.0)]);
        let issues = validate(&bundle_with(vec![("a.png", beyond)]));
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::OutsideFrame);
        let flat = poly(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let kinds: Vec<_> = validate(&bundle_with(vec![("a.png", flat)])).iter().map(|i| i.kind).collect();
        assert!(kinds.contains(&IssueKind::ZeroArea));
    }

    #[test]
    fn registry_and_id_errors() {
        let mut b = bundle_with(vec![
            ("a.png", poly(&[(1.0, 1.0), (5.0, 1.0), (5.0, 5.0)])),
            ("a.png", poly(&[(1.0, 1.0), (5.0, 1.0), (5.0, 5.0)])),
        ]);
        b.annotations[1].stable_id = 0;
        b.annotations[1].class_id = 99;
        let kinds: Vec<_> = validate(&b).iter().map(|i| i.kind).collect();
        assert_eq!(kinds, vec![IssueKind::DuplicateStableId, IssueKind::UnknownClass]);
    }
}
