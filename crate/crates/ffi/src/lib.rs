//! C ABI over `segeval`.
//!
//! Objects cross the boundary as opaque handles created by a
//! `*_from_*` or `segeval_evaluate` call and released by the matching
//! `*_free`. Every fallible call returns a [`SegevalStatus`]; on failure
//! [`segeval_last_error`] describes the cause. Strings returned through
//! `char **` are owned by the caller and released with
//! [`segeval_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use segeval::dataset::{parse_detections, parse_manifest, parse_via, ClassRegistry, DatasetBundle, Detection};
use segeval::evaluation::{
    evaluate, fp_fn_counts, image_level_accuracy, EvaluationReport, IouKind, KindSelection, MatchConfig,
};
use segeval::geometry::{box_iou, mask_iou, rasterize, BoundingBox, Polygon};
use segeval::report::format_report;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegevalStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    EvaluationError = 5,
    GeometryError = 6,
    Panic = 7,
}

pub const SEGEVAL_KIND_BOX: u32 = 0;
pub const SEGEVAL_KIND_MASK: u32 = 1;
/// Box always, mask when every detection has a polygon.
pub const SEGEVAL_KIND_BOTH: u32 = 2;

/// Parsed ground truth.
pub struct SegevalBundle {
    inner: DatasetBundle,
}

/// Parsed predictions, tied to the bundle's class registry.
pub struct SegevalDetections {
    inner: Vec<Detection>,
}

/// Result of [`segeval_evaluate`].
pub struct SegevalReport {
    inner: EvaluationReport,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SegevalConfig {
    /// One of the `SEGEVAL_KIND_*` values.
    pub kind: u32,
    pub score_threshold: f64,
    /// Nonzero counts non-defect classes in the mean rows.
    pub include_non_defect: i32,
    /// Worker cap; 0 uses all cores.
    pub threads: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegevalCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(SegevalStatus, String);

type Outcome = Result<(), Failure>;

fn fail<T>(status: SegevalStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Outcome) -> SegevalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SegevalStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SegevalStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(SegevalStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(SegevalStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, name).map(Some)
    }
}

unsafe fn obj<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(SegevalStatus::NullArgument, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        fail(SegevalStatus::NullArgument, format!("{name} is null"))
    } else {
        Ok(())
    }
}

fn iou_kind(kind: u32) -> Result<IouKind, Failure> {
    match kind {
        SEGEVAL_KIND_BOX => Ok(IouKind::Box),
        SEGEVAL_KIND_MASK => Ok(IouKind::Mask),
        k => fail(SegevalStatus::InvalidArgument, format!("kind {k} is not box (0) or mask (1)")),
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn segeval_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn segeval_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn segeval_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Defaults: both kinds, score threshold 0.70, defect classes
/// only in the means.
#[no_mangle]
pub extern "C" fn segeval_config_default() -> SegevalConfig {
    SegevalConfig {
        kind: SEGEVAL_KIND_BOTH,
        score_threshold: 0.70,
        include_non_defect: 0,
        threads: 0,
    }
}

/// Parses a VIA document with the seven-class rope registry. `manifest`
/// (`file_name,width,height` lines) may be null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_bundle_from_via(
    via_json: *const c_char,
    manifest: *const c_char,
    out: *mut *mut SegevalBundle,
) -> SegevalStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let doc = text(via_json, "via_json")?;
        let manifest = match opt_text(manifest, "manifest")? {
            Some(m) => Some(parse_manifest(m).or_else(|e| fail(SegevalStatus::ParseError, e.to_string()))?),
            None => None,
        };
        let inner = parse_via(doc, &ClassRegistry::rope_defects(), "label", manifest.as_ref())
            .or_else(|e| fail(SegevalStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(SegevalBundle { inner }));
        Ok(())
    })
}

/// # Safety
/// `b` must be null or a live handle from [`segeval_bundle_from_via`].
#[no_mangle]
pub unsafe extern "C" fn segeval_bundle_free(b: *mut SegevalBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// # Safety
/// `b` must be a live handle; `images` and `annotations` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_bundle_counts(
    b: *const SegevalBundle,
    images: *mut usize,
    annotations: *mut usize,
) -> SegevalStatus {
    guard(|| {
        let b = obj(b, "bundle")?;
        out_ptr(images, "images")?;
        out_ptr(annotations, "annotations")?;
        *images = b.inner.images.len();
        *annotations = b.inner.annotations.len();
        Ok(())
    })
}

/// Parses a prediction document against the bundle's classes.
///
/// # Safety
/// `b` must be a live handle, `json` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_detections_from_json(
    b: *const SegevalBundle,
    json: *const c_char,
    out: *mut *mut SegevalDetections,
) -> SegevalStatus {
    guard(|| {
        let b = obj(b, "bundle")?;
        out_ptr(out, "out")?;
        let doc = text(json, "json")?;
        let inner = parse_detections(doc, &b.inner.registry).or_else(|e| fail(SegevalStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(SegevalDetections { inner }));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn segeval_detections_free(d: *mut SegevalDetections) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_detections_count(d: *const SegevalDetections, count: *mut usize) -> SegevalStatus {
    guard(|| {
        let d = obj(d, "detections")?;
        out_ptr(count, "count")?;
        *count = d.inner.len();
        Ok(())
    })
}

/// Full AP report. `cfg` may be null for [`segeval_config_default`].
///
/// # Safety
/// Handles must be live; `cfg` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_evaluate(
    b: *const SegevalBundle,
    d: *const SegevalDetections,
    cfg: *const SegevalConfig,
    out: *mut *mut SegevalReport,
) -> SegevalStatus {
    guard(|| {
        let b = obj(b, "bundle")?;
        let d = obj(d, "detections")?;
        out_ptr(out, "out")?;
        let c = cfg.as_ref().copied().unwrap_or_else(|| segeval_config_default());
        let iou_kind = match c.kind {
            SEGEVAL_KIND_BOX => KindSelection::Box,
            SEGEVAL_KIND_MASK => KindSelection::Mask,
            SEGEVAL_KIND_BOTH => KindSelection::Both,
            k => return fail(SegevalStatus::InvalidArgument, format!("unknown kind {k}")),
        };
        let mc = MatchConfig {
            iou_kind,
            score_threshold: c.score_threshold,
            include_non_defect: c.include_non_defect != 0,
            threads: (c.threads > 0).then_some(c.threads as usize),
            ..MatchConfig::default()
        };
        let inner = evaluate(&b.inner, &d.inner, &mc).or_else(|e| fail(SegevalStatus::EvaluationError, e.to_string()))?;
        *out = Box::into_raw(Box::new(SegevalReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn segeval_report_free(r: *mut SegevalReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// One cell of the report. `scope` is a class name or `"mean"`, `column`
/// one of `AP`, `AP50`, `AP75`, `AP_m`, `AP_l`. `defined` is set to 0 for
/// an undefined cell (then `value` is NaN) or a missing kind/scope/column.
///
/// # Safety
/// `r` must be a live handle, strings NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_report_value(
    r: *const SegevalReport,
    kind: u32,
    scope: *const c_char,
    column: *const c_char,
    value: *mut f64,
    defined: *mut i32,
) -> SegevalStatus {
    guard(|| {
        let r = obj(r, "report")?;
        let kind = iou_kind(kind)?;
        let scope = text(scope, "scope")?;
        let column = text(column, "column")?;
        out_ptr(value, "value")?;
        out_ptr(defined, "defined")?;
        let v = r.inner.value(kind, scope, column);
        *value = v.unwrap_or(f64::NAN);
        *defined = v.is_some() as i32;
        Ok(())
    })
}

/// Pretty JSON report. `model` may be null.
///
/// # Safety
/// `r` must be a live handle, `model` null or NUL-terminated, `out`
/// writable. Free the result with [`segeval_string_free`].
#[no_mangle]
pub unsafe extern "C" fn segeval_report_json(
    r: *const SegevalReport,
    model: *const c_char,
    out: *mut *mut c_char,
) -> SegevalStatus {
    render(r, model, out, |x| x.json)
}

/// Text table with columns `[Model |] Type | AP | AP50 | AP75 | AP_m | AP_l`.
///
/// # Safety
/// As [`segeval_report_json`].
#[no_mangle]
pub unsafe extern "C" fn segeval_report_table(
    r: *const SegevalReport,
    model: *const c_char,
    out: *mut *mut c_char,
) -> SegevalStatus {
    render(r, model, out, |x| x.table)
}

/// CSV with raw ratios.
///
/// # Safety
/// As [`segeval_report_json`].
#[no_mangle]
pub unsafe extern "C" fn segeval_report_csv(
    r: *const SegevalReport,
    model: *const c_char,
    out: *mut *mut c_char,
) -> SegevalStatus {
    render(r, model, out, |x| x.csv)
}

unsafe fn render(
    r: *const SegevalReport,
    model: *const c_char,
    out: *mut *mut c_char,
    pick: fn(segeval::report::RenderedReport) -> String,
) -> SegevalStatus {
    guard(|| {
        let r = obj(r, "report")?;
        let model = opt_text(model, "model")?;
        out_ptr(out, "out")?;
        let rendered = format_report(&r.inner, model).or_else(|e| fail(SegevalStatus::InvalidArgument, e.to_string()))?;
        *out = into_c_string(pick(rendered));
        Ok(())
    })
}

/// TP/FP/FN after dropping detections scoring below `score_threshold`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_fp_fn_counts(
    b: *const SegevalBundle,
    d: *const SegevalDetections,
    score_threshold: f64,
    iou_threshold: f64,
    kind: u32,
    out: *mut SegevalCounts,
) -> SegevalStatus {
    guard(|| {
        let b = obj(b, "bundle")?;
        let d = obj(d, "detections")?;
        out_ptr(out, "out")?;
        let c = fp_fn_counts(&b.inner, &d.inner, score_threshold, iou_threshold, iou_kind(kind)?)
            .or_else(|e| fail(SegevalStatus::EvaluationError, e.to_string()))?;
        *out = SegevalCounts {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        };
        Ok(())
    })
}

/// Images whose defective/clean prediction at `tau` matches the truth.
///
/// # Safety
/// Handles must be live and outputs writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_image_accuracy(
    b: *const SegevalBundle,
    d: *const SegevalDetections,
    tau: f64,
    correct: *mut usize,
    total: *mut usize,
) -> SegevalStatus {
    guard(|| {
        let b = obj(b, "bundle")?;
        let d = obj(d, "detections")?;
        out_ptr(correct, "correct")?;
        out_ptr(total, "total")?;
        let a = image_level_accuracy(&b.inner, &d.inner, tau);
        *correct = a.correct;
        *total = a.total;
        Ok(())
    })
}

/// IoU of two boxes given as `{x_min, y_min, x_max, y_max}`.
///
/// # Safety
/// `a` and `b` must point to 4 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_box_iou(a: *const f64, b: *const f64, out: *mut f64) -> SegevalStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return fail(SegevalStatus::NullArgument, "box is null");
        }
        out_ptr(out, "out")?;
        let mk = |p: *const f64| {
            let v = std::slice::from_raw_parts(p, 4);
            BoundingBox::new(v[0], v[1], v[2], v[3]).or_else(|e| fail(SegevalStatus::GeometryError, e.to_string()))
        };
        *out = box_iou(&mk(a)?, &mk(b)?);
        Ok(())
    })
}

unsafe fn polygon(xs: *const f64, ys: *const f64, n: usize, name: &str) -> Result<Polygon, Failure> {
    if xs.is_null() || ys.is_null() {
        return fail(SegevalStatus::NullArgument, format!("{name} coordinates are null"));
    }
    Polygon::from_xy(std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(ys, n))
        .or_else(|e| fail(SegevalStatus::GeometryError, format!("{name}: {e}")))
}

/// IoU of two polygons rasterized in a `width` x `height` frame.
///
/// # Safety
/// Each coordinate pointer must reference `n_*` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn segeval_polygon_mask_iou(
    xs_a: *const f64,
    ys_a: *const f64,
    n_a: usize,
    xs_b: *const f64,
    ys_b: *const f64,
    n_b: usize,
    width: u32,
    height: u32,
    out: *mut f64,
) -> SegevalStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let a = polygon(xs_a, ys_a, n_a, "polygon a")?;
        let b = polygon(xs_b, ys_b, n_b, "polygon b")?;
        let (ma, mb) = (rasterize(&a, width, height), rasterize(&b, width, height));
        *out = mask_iou(&ma, &mb).or_else(|e| fail(SegevalStatus::GeometryError, e.to_string()))?;
        Ok(())
    })
}
