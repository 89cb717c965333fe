//! VGG Image Annotator (VIA) polygon documents and sidecar size manifests.
//!
//! Accepted layout: a top-level object mapping file keys to
//! `{ "filename", "size", "regions": [ { "shape_attributes": { "name":
//! "polygon", "all_points_x", "all_points_y" }, "region_attributes": {
//! <key>: label } } ] }`. A VIA project export that wraps this object in
//! `_via_img_metadata` is unwrapped. Optional `file_attributes.width` and
//! `file_attributes.height` carry frame dimensions.

use std::collections::HashMap;

use serde_json::{Map, Number, Value};

use super::{
    polygon_from_points, ClassRegistry, DatasetBundle, DatasetError, GroundTruthAnnotation,
    ImageRecord, Result,
};

pub const DEFAULT_ATTRIBUTE_KEY: &str = "label";

/// Frame used when neither a manifest nor the document gives dimensions.
pub const DEFAULT_FRAME: (u32, u32) = (2040, 1086);

/// `file_name -> (width, height)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    sizes: HashMap<String, (u32, u32)>,
}

impl Manifest {
    pub fn get(&self, file_name: &str) -> Option<(u32, u32)> {
        self.sizes.get(file_name).copied()
    }

    pub fn insert(&mut self, file_name: impl Into<String>, width: u32, height: u32) {
        self.sizes.insert(file_name.into(), (width, height));
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }
}

/// One `file_name,width,height` record per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut m = Manifest::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.rsplitn(3, ',').collect();
        if fields.len() != 3 {
            return Err(DatasetError::Manifest {
                line: line_no,
                message: format!("expected file_name,width,height but got {line:?}"),
            });
        }
        let dim = |s: &str, what: &str| -> Result<u32> {
            match s.trim().parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(DatasetError::Manifest {
                    line: line_no,
                    message: format!("{what} must be a positive integer, got {s:?}"),
                }),
            }
        };
        let height = dim(fields[0], "height")?;
        let width = dim(fields[1], "width")?;
        let name = fields[2].trim();
        if name.is_empty() {
            return Err(DatasetError::Manifest {
                line: line_no,
                message: "empty file name".into(),
            });
        }
        m.insert(name, width, height);
    }
    Ok(m)
}

fn parse_err(location: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        location: location.to_string(),
        message: message.into(),
    }
}

fn numbers(v: Option<&Value>, location: &str, field: &str) -> Result<Vec<f64>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(location, format!("missing or non-array {field:?}")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| parse_err(location, format!("{field}[{i}] is not a finite number")))
        })
        .collect()
}

fn dimension(v: &Value) -> Option<u32> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|x| u32::try_from(x).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|&d| d >= 1)
}

/// Parses a VIA document into a bundle.
///
/// Dimensions come from `manifest` when it lists the file, else from the
/// document's `file_attributes`, else [`DEFAULT_FRAME`]. Annotations get
/// `stable_id`s in document order starting at 0.
pub fn parse_via(
    doc: &str,
    registry: &ClassRegistry,
    attribute_key: &str,
    manifest: Option<&Manifest>,
) -> Result<DatasetBundle> {
    let root: Value = serde_json::from_str(doc)?;
    let mut obj = root
        .as_object()
        .ok_or_else(|| parse_err("document", "top level must be an object"))?;
    if let Some(inner) = obj.get("_via_img_metadata") {
        obj = inner
            .as_object()
            .ok_or_else(|| parse_err("_via_img_metadata", "must be an object"))?;
    }

    let mut bundle = DatasetBundle::new(registry.clone());
    let mut next_id = 0u64;
    for (key, entry) in obj {
        let loc = format!("via[{key:?}]");
        let entry = entry
            .as_object()
            .ok_or_else(|| parse_err(&loc, "file entry must be an object"))?;
        let file_name = entry
            .get("filename")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(&loc, "missing string \"filename\""))?
            .to_string();
        if bundle.images.iter().any(|i| i.file_name == file_name) {
            return Err(parse_err(&loc, format!("duplicate filename {file_name:?}")));
        }
        let file_size = match entry.get("size") {
            None => -1,
            Some(v) => v
                .as_i64()
                .ok_or_else(|| parse_err(&loc, "\"size\" must be an integer"))?,
        };
        let attrs = entry.get("file_attributes").and_then(Value::as_object);
        let doc_dims = attrs.and_then(|a| Some((dimension(a.get("width")?)?, dimension(a.get("height")?)?)));
        let (width, height) = manifest
            .and_then(|m| m.get(&file_name))
            .or(doc_dims)
            .unwrap_or(DEFAULT_FRAME);

        let regions = entry
            .get("regions")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err(&loc, "missing array \"regions\""))?;
        for (ri, region) in regions.iter().enumerate() {
            let rloc = format!("{loc}.regions[{ri}]");
            let shape = region
                .get("shape_attributes")
                .and_then(Value::as_object)
                .ok_or_else(|| parse_err(&rloc, "missing object \"shape_attributes\""))?;
            let name = shape
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| parse_err(&rloc, "shape_attributes has no \"name\""))?;
            if name != "polygon" {
                return Err(DatasetError::UnsupportedShape {
                    location: rloc,
                    shape: name.to_string(),
                });
            }
            let xs = numbers(shape.get("all_points_x"), &rloc, "all_points_x")?;
            let ys = numbers(shape.get("all_points_y"), &rloc, "all_points_y")?;
            let label = region
                .get("region_attributes")
                .and_then(|r| r.get(attribute_key))
                .and_then(Value::as_str)
                .ok_or_else(|| {
                    parse_err(&rloc, format!("region_attributes has no string {attribute_key:?}"))
                })?;
            let class_id = registry.resolve(label).ok_or_else(|| DatasetError::UnknownClass {
                location: rloc.clone(),
                label: label.to_string(),
            })?;
            let polygon = polygon_from_points(&xs, &ys, &rloc)?;
            bundle.annotations.push(GroundTruthAnnotation {
                image_ref: file_name.clone(),
                class_id,
                polygon,
                stable_id: next_id,
            });
            next_id += 1;
        }
        bundle.images.push(ImageRecord {
            file_name,
            width,
            height,
            file_size,
        });
    }
    Ok(bundle)
}

/// Integral values are written as JSON integers, like VIA itself does.
pub(crate) fn coord_value(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Value::Number(Number::from(v as i64))
    } else {
        Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
    }
}

/// Serializes a bundle in the VIA layout. Frame dimensions are written to
/// `file_attributes` so the document re-parses without a manifest.
pub fn to_via(b: &DatasetBundle, attribute_key: &str) -> Value {
    let by_image = b.annotations_by_image();
    let mut root = Map::new();
    for (img, anns) in b.images.iter().zip(by_image) {
        let regions: Vec<Value> = anns
            .iter()
            .map(|a| {
                let label = b.registry.name(a.class_id).unwrap_or_default();
                let mut shape = Map::new();
                shape.insert("name".into(), Value::from("polygon"));
                shape.insert(
                    "all_points_x".into(),
                    Value::Array(a.polygon.vertices().iter().map(|v| coord_value(v.x)).collect()),
                );
                shape.insert(
                    "all_points_y".into(),
                    Value::Array(a.polygon.vertices().iter().map(|v| coord_value(v.y)).collect()),
                );
                let mut attrs = Map::new();
                attrs.insert(attribute_key.to_string(), Value::from(label));
                let mut region = Map::new();
                region.insert("shape_attributes".into(), Value::Object(shape));
                region.insert("region_attributes".into(), Value::Object(attrs));
                Value::Object(region)
            })
            .collect();
        let mut fattrs = Map::new();
        fattrs.insert("width".into(), Value::from(img.width));
        fattrs.insert("height".into(), Value::from(img.height));
        let mut entry = Map::new();
        entry.insert("filename".into(), Value::from(img.file_name.clone()));
        entry.insert("size".into(), Value::from(img.file_size));
        entry.insert("regions".into(), Value::Array(regions));
        entry.insert("file_attributes".into(), Value::Object(fattrs));
        root.insert(format!("{}{}", img.file_name, img.file_size), Value::Object(entry));
    }
    Value::Object(root)
}
