//! Prediction files: a JSON list of
//! `{ "image", "category", "score", "segmentation"?, "bbox"? }` records.

use serde_json::{Map, Value};

use super::via::coord_value;
use super::{polygon_from_points, ClassRegistry, DatasetError, Detection, Result};
use crate::geometry::{polygon_bbox, BoundingBox};

fn parse_err(location: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        location: location.to_string(),
        message: message.into(),
    }
}

fn number_list(v: &Value, location: &str, field: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| parse_err(location, format!("{field} must be an array")))?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| parse_err(location, format!("{field}[{i}] is not a finite number")))
        })
        .collect()
}

/// Parses a prediction document. Records keep their file order, which is the
/// tie-break for equal scores downstream.
///
/// An explicit `bbox` is kept as given; otherwise the box is derived from
/// the segmentation polygon.
pub fn parse_detections(doc: &str, registry: &ClassRegistry) -> Result<Vec<Detection>> {
    let root: Value = serde_json::from_str(doc)?;
    let records = root
        .as_array()
        .ok_or_else(|| parse_err("predictions", "top level must be a list"))?;
    let mut out = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let loc = format!("predictions[{i}]");
        let rec = rec
            .as_object()
            .ok_or_else(|| parse_err(&loc, "record must be an object"))?;
        let image_ref = rec
            .get("image")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(&loc, "missing string \"image\""))?
            .to_string();
        let class_id = match rec.get("category") {
            Some(Value::String(s)) => registry.resolve(s).ok_or_else(|| DatasetError::UnknownClass {
                location: loc.clone(),
                label: s.clone(),
            })?,
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|id| u32::try_from(id).ok())
                .filter(|&id| registry.get(id).is_some())
                .ok_or_else(|| DatasetError::UnknownClass {
                    location: loc.clone(),
                    label: n.to_string(),
                })?,
            _ => return Err(parse_err(&loc, "\"category\" must be a string or integer")),
        };
        let score = rec
            .get("score")
            .and_then(Value::as_f64)
            .ok_or_else(|| parse_err(&loc, "missing numeric \"score\""))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(DatasetError::ScoreOutOfRange { location: loc, score });
        }
        let polygon = match rec.get("segmentation") {
            None | Some(Value::Null) => None,
            Some(seg) => {
                let xs = number_list(seg.get("all_points_x").unwrap_or(&Value::Null), &loc, "segmentation.all_points_x")?;
                let ys = number_list(seg.get("all_points_y").unwrap_or(&Value::Null), &loc, "segmentation.all_points_y")?;
                Some(polygon_from_points(&xs, &ys, &loc)?)
            }
        };
        let geo = |source| DatasetError::Geometry {
            location: loc.clone(),
            source,
        };
        let bbox = match rec.get("bbox") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let b = number_list(v, &loc, "bbox")?;
                if b.len() != 4 {
                    return Err(parse_err(&loc, format!("bbox needs 4 values, got {}", b.len())));
                }
                Some(BoundingBox::from_xywh(b[0], b[1], b[2], b[3]).map_err(geo)?)
            }
        };
        let bbox = match (bbox, &polygon) {
            (Some(b), _) => Some(b),
            (None, Some(p)) => Some(polygon_bbox(p).map_err(geo)?),
            (None, None) => {
                return Err(parse_err(&loc, "record needs a \"segmentation\" or a \"bbox\""));
            }
        };
        out.push(Detection {
            image_ref,
            class_id,
            score,
            polygon,
            bbox,
        });
    }
    Ok(out)
}

/// Writes detections back to the prediction layout with category names.
pub fn detections_to_json(dets: &[Detection], registry: &ClassRegistry) -> Value {
    Value::Array(
        dets.iter()
            .map(|d| {
                let mut rec = Map::new();
                rec.insert("image".into(), Value::from(d.image_ref.clone()));
                rec.insert(
                    "category".into(),
                    match registry.name(d.class_id) {
                        Some(n) => Value::from(n),
                        None => Value::from(d.class_id),
                    },
                );
                rec.insert("score".into(), Value::from(d.score));
                if let Some(p) = &d.polygon {
                    let mut seg = Map::new();
                    seg.insert("all_points_x".into(), p.vertices().iter().map(|v| coord_value(v.x)).collect());
                    seg.insert("all_points_y".into(), p.vertices().iter().map(|v| coord_value(v.y)).collect());
                    rec.insert("segmentation".into(), Value::Object(seg));
                }
                if let Some(b) = &d.bbox {
                    rec.insert("bbox".into(), b.to_xywh().iter().map(|&v| coord_value(v)).collect());
                }
                Value::Object(rec)
            })
            .collect(),
    )
}
