//! Annotated dataset model: class registry, images, ground truth and
//! detections, plus ingestion, statistics, splitting and validation.

mod predictions;
mod split;
mod validate;
mod via;

pub use predictions::{detections_to_json, parse_detections};
pub use split::{split, SplitSizes};
pub use validate::{validate, validate_with_manifest, Issue, IssueKind, Severity};
pub use via::{parse_manifest, parse_via, to_via, Manifest, DEFAULT_ATTRIBUTE_KEY, DEFAULT_FRAME};

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{BoundingBox, GeometryError, Point2, Polygon};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("{location}: unknown class label {label:?}")]
    UnknownClass { location: String, label: String },
    #[error("{location}: unsupported region shape {shape:?} (only \"polygon\" is accepted)")]
    UnsupportedShape { location: String, shape: String },
    #[error("{location}: polygon needs at least 3 distinct points, got {count}")]
    TooFewPoints { location: String, count: usize },
    #[error("{location}: score {score} outside [0, 1]")]
    ScoreOutOfRange { location: String, score: f64 },
    #[error("{location}: {source}")]
    Geometry {
        location: String,
        source: GeometryError,
    },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("split sizes sum to {actual} but the bundle has {expected} images")]
    SplitSizes { expected: usize, actual: usize },
    #[error("invalid class registry: {0}")]
    Registry(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassEntry {
    pub id: u32,
    pub name: String,
    pub is_defect: bool,
}

/// Ordered class list with dense ids starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRegistry {
    entries: Vec<ClassEntry>,
}

/// Lowercase, trimmed, with spaces and hyphens folded to underscores.
fn normalize_label(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| match c {
            ' ' | '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

impl ClassRegistry {
    /// Ids are assigned in the given order.
    pub fn new<S: Into<String>>(classes: impl IntoIterator<Item = (S, bool)>) -> Result<Self> {
        let mut entries = Vec::new();
        for (id, (name, is_defect)) in classes.into_iter().enumerate() {
            let name = name.into();
            if name.trim().is_empty() {
                return Err(DatasetError::Registry(format!("class {id} has an empty name")));
            }
            if entries.iter().any(|e: &ClassEntry| e.name == name) {
                return Err(DatasetError::Registry(format!("duplicate class name {name:?}")));
            }
            entries.push(ClassEntry {
                id: id as u32,
                name,
                is_defect,
            });
        }
        Ok(Self { entries })
    }

    /// The seven rope classes; only `normal` is not a defect.
    pub fn rope_defects() -> Self {
        Self::new([
            ("placking_high", true),
            ("placking_medium", true),
            ("placking_low", true),
            ("compression", true),
            ("core_out", true),
            ("chafing", true),
            ("normal", false),
        ])
        .expect("built-in registry is valid")
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&ClassEntry> {
        self.entries.get(id as usize)
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.get(id).map(|e| e.name.as_str())
    }

    pub fn is_defect(&self, id: u32) -> bool {
        self.get(id).is_some_and(|e| e.is_defect)
    }

    /// Exact name match first, then a case/space-insensitive match
    /// ("Placking Low" resolves to `placking_low`).
    pub fn resolve(&self, label: &str) -> Option<u32> {
        if let Some(e) = self.entries.iter().find(|e| e.name == label) {
            return Some(e.id);
        }
        let norm = normalize_label(label);
        self.entries
            .iter()
            .find(|e| normalize_label(&e.name) == norm)
            .map(|e| e.id)
    }
}

impl Default for ClassRegistry {
    fn default() -> Self {
        Self::rope_defects()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRecord {
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// The VIA `size` field (file size in bytes), kept for re-serialization.
    pub file_size: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthAnnotation {
    pub image_ref: String,
    pub class_id: u32,
    pub polygon: Polygon,
    pub stable_id: u64,
}

/// A scored prediction. At least one footprint is present; when only a
/// polygon was supplied the box is its tight bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_ref: String,
    pub class_id: u32,
    pub score: f64,
    pub polygon: Option<Polygon>,
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub registry: ClassRegistry,
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<GroundTruthAnnotation>,
}

impl DatasetBundle {
    pub fn new(registry: ClassRegistry) -> Self {
        Self {
            registry,
            images: Vec::new(),
            annotations: Vec::new(),
        }
    }

    pub fn image(&self, file_name: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.file_name == file_name)
    }

    /// Image name to index in `images`.
    pub fn image_index(&self) -> HashMap<&str, usize> {
        self.images
            .iter()
            .enumerate()
            .map(|(i, r)| (r.file_name.as_str(), i))
            .collect()
    }

    /// Annotations grouped per image, in `images` order. Annotations with a
    /// dangling image reference are left out.
    pub fn annotations_by_image(&self) -> Vec<Vec<&GroundTruthAnnotation>> {
        let index = self.image_index();
        let mut out = vec![Vec::new(); self.images.len()];
        for a in &self.annotations {
            if let Some(&i) = index.get(a.image_ref.as_str()) {
                out[i].push(a);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassHistogram {
    /// `(class name, annotation count)` in registry order.
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

impl ClassHistogram {
    pub fn count(&self, name: &str) -> Option<usize> {
        self.counts.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }
}

pub fn class_histogram(b: &DatasetBundle) -> ClassHistogram {
    let mut counts = vec![0usize; b.registry.len()];
    for a in &b.annotations {
        if let Some(c) = counts.get_mut(a.class_id as usize) {
            *c += 1;
        }
    }
    ClassHistogram {
        counts: b
            .registry
            .entries()
            .iter()
            .zip(counts)
            .map(|(e, c)| (e.name.clone(), c))
            .collect(),
        total: b.annotations.len(),
    }
}

/// Builds a polygon from VIA-style coordinate lists, dropping consecutive
/// repeated points (including a closing point equal to the first).
pub(crate) fn polygon_from_points(xs: &[f64], ys: &[f64], location: &str) -> Result<Polygon> {
    if xs.len() != ys.len() {
        return Err(DatasetError::Parse {
            location: location.to_string(),
            message: format!(
                "all_points_x has {} values but all_points_y has {}",
                xs.len(),
                ys.len()
            ),
        });
    }
    let mut pts: Vec<Point2> = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        let p = Point2::new(x, y);
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(DatasetError::TooFewPoints {
            location: location.to_string(),
            count: pts.len(),
        });
    }
    Polygon::new(pts).map_err(|source| DatasetError::Geometry {
        location: location.to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64) -> Polygon {
        Polygon::from_xy(&[x, x + 1.0, x + 1.0, x], &[y, y, y + 1.0, y + 1.0]).unwrap()
    }

    #[test]
    fn default_registry_has_seven_classes() {
        let r = ClassRegistry::default();
        assert_eq!(r.len(), 7);
        let names: Vec<_> = r.entries().iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            ["placking_high", "placking_medium", "placking_low", "compression", "core_out", "chafing", "normal"]
        );
        let non_defect: Vec<_> = r.entries().iter().filter(|e| !e.is_defect).map(|e| e.name.as_str()).collect();
        assert_eq!(non_defect, ["normal"]);
        for (i, e) in r.entries().iter().enumerate() {
            assert_eq!(e.id as usize, i);
        }
    }

    #[test]
    fn registry_resolves_label_variants() {
        let r = ClassRegistry::default();
        assert_eq!(r.resolve("chafing"), Some(5));
        assert_eq!(r.resolve("Placking Low"), Some(2));
        assert_eq!(r.resolve("core out"), Some(4));
        assert_eq!(r.resolve("Core-Out"), Some(4));
        assert_eq!(r.resolve("rust"), None);
    }

    #[test]
    fn registry_rejects_bad_names() {
        assert!(ClassRegistry::new([("a", true), ("a", false)]).is_err());
        assert!(ClassRegistry::new([("", true)]).is_err());
    }

    #[test]
    fn histogram_counts() {
        let mut b = DatasetBundle::new(ClassRegistry::default());
        let h = class_histogram(&b);
        assert_eq!(h.total, 0);
        assert!(h.counts.iter().all(|(_, c)| *c == 0));

        b.images.push(ImageRecord {
            file_name: "a.png".into(),
            width: 10,
            height: 10,
            file_size: 0,
        });
        b.annotations.push(GroundTruthAnnotation {
            image_ref: "a.png".into(),
            class_id: 5,
            polygon: square(1.0, 1.0),
            stable_id: 0,
        });
        let h = class_histogram(&b);
        assert_eq!(h.total, 1);
        assert_eq!(h.count("chafing"), Some(1));
        assert_eq!(h.counts.iter().map(|(_, c)| c).sum::<usize>(), 1);
    }

    #[test]
    fn points_cleanup() {
        let p = polygon_from_points(&[0.0, 1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0, 0.0], "r").unwrap();
        assert_eq!(p.len(), 4);
        let p = polygon_from_points(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 0.0, 1.0], "r").unwrap();
        assert_eq!(p.len(), 3);
        assert!(matches!(
            polygon_from_points(&[0.0, 1.0], &[0.0, 1.0], "r"),
            Err(DatasetError::TooFewPoints { count: 2, .. })
        ));
    }
}
