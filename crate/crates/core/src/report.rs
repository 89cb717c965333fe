//! Rendering of evaluation reports and curves: a text table in the layout
//! `Model | Type | AP | AP50 | AP75 | AP_m | AP_l`, a CSV with raw ratios,
//! pretty JSON, and CSV/SVG curve files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::evaluation::{ClassCurve, EvaluationReport, KindReport, PRCurve, ReportRow, SweepPoint};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ReportError>;

/// Shown for undefined cells.
pub const UNDEFINED: &str = "—";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub table: String,
    pub csv: String,
    pub json: String,
}

#[derive(Serialize)]
struct Document<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    #[serde(flatten)]
    report: &'a EvaluationReport,
}

/// Percentage with two decimals, or [`UNDEFINED`].
pub fn percent_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}", v * 100.0),
        None => UNDEFINED.to_string(),
    }
}

fn type_cell(k: &KindReport, row: &ReportRow) -> String {
    if row.class_id.is_none() {
        k.kind.label().to_string()
    } else {
        format!("{} ({})", k.kind.label(), row.scope)
    }
}

/// One table row: optional model cell, type cell, then value cells.
pub fn table_row(model: Option<&str>, type_label: &str, values: &[Option<f64>]) -> String {
    let mut cells: Vec<String> = model.map(str::to_string).into_iter().collect();
    cells.push(type_label.to_string());
    cells.extend(values.iter().map(|&v| percent_cell(v)));
    cells.join(" | ")
}

/// Renders the table, CSV and JSON forms. The table lists, per kind, the
/// class-mean row (labelled by the kind alone) followed by one row per
/// class.
pub fn format_report(r: &EvaluationReport, model: Option<&str>) -> Result<RenderedReport> {
    let mut header: Vec<&str> = Vec::new();
    if model.is_some() {
        header.push("Model");
    }
    header.push("Type");
    header.extend(r.columns.iter().map(String::as_str));
    let mut table = header.join(" | ");
    table.push('\n');
    for k in &r.kinds {
        for row in std::iter::once(&k.mean).chain(&k.classes) {
            table.push_str(&table_row(model, &type_cell(k, row), &row.values));
            table.push('\n');
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["model", "kind", "scope", "class_id"];
    head.extend(r.columns.iter().map(String::as_str));
    w.write_record(&head)?;
    for k in &r.kinds {
        for row in std::iter::once(&k.mean).chain(&k.classes) {
            let mut rec = vec![
                model.unwrap_or("").to_string(),
                k.kind.key().to_string(),
                row.scope.clone(),
                row.class_id.map(|c| c.to_string()).unwrap_or_default(),
            ];
            rec.extend(row.values.iter().map(|v| v.map(|x| format!("{x:?}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is utf-8");

    let mut json = serde_json::to_string_pretty(&Document { model, report: r })?;
    json.push('\n');
    Ok(RenderedReport { table, csv, json })
}

/// `recall,precision` CSV, one line per curve point.
pub fn pr_curve_csv(c: &PRCurve) -> String {
    let mut s = String::from("recall,precision\n");
    for (r, p) in &c.points {
        let _ = writeln!(s, "{r:?},{p:?}");
    }
    s
}

/// `tau,fp,fn,tp` CSV, one line per sweep point.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("tau,fp,fn,tp\n");
    for p in points {
        let _ = writeln!(s, "{:?},{},{},{}", p.tau, p.fp, p.fn_, p.tp);
    }
    s
}

/// A polyline chart with linear axes spanning the data (and `[0, 1]` on
/// both axes when all data lies inside it).
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 48.0;
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#,
        H - M,
        W - M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, x) in [(x0, M), (x1, W - M)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{v}</text>"#, H - M + 16.0);
    }
    for (v, y) in [(y0, H - M), (y1, M)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v}</text>"#, M - 4.0);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = palette[i % palette.len()];
        if !pts.is_empty() {
            let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.join(" ")
            );
        }
        let ly = M + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            W - M,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes one `pr_<kind>_<class>_iou<NN>.csv` per curve and, with a sweep,
/// `sweep.csv`. With `svg`, also one chart per kind and threshold and one
/// sweep chart. Returns the written paths in order.
pub fn emit_curves(dir: &Path, curves: &[ClassCurve], sweep: Option<&[SweepPoint]>, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let tag = |t: f64| format!("iou{}", (t * 100.0).round() as i64);
    for c in curves {
        let p = dir.join(format!(
            "pr_{}_{}_{}.csv",
            c.kind.key(),
            slug(&c.class_name),
            tag(c.iou_threshold)
        ));
        write_file(&p, &pr_curve_csv(&c.curve))?;
        written.push(p);
    }
    if svg {
        let mut groups: Vec<(crate::evaluation::IouKind, f64)> = Vec::new();
        for c in curves {
            if !groups.contains(&(c.kind, c.iou_threshold)) {
                groups.push((c.kind, c.iou_threshold));
            }
        }
        for (kind, t) in groups {
            let series: Vec<(String, Vec<(f64, f64)>)> = curves
                .iter()
                .filter(|c| c.kind == kind && c.iou_threshold == t && c.curve.is_defined())
                .map(|c| (c.class_name.clone(), c.curve.points.clone()))
                .collect();
            let title = format!("{} precision-recall, IoU {t}", kind.label());
            let p = dir.join(format!("pr_{}_{}.svg", kind.key(), tag(t)));
            write_file(&p, &line_chart_svg(&title, "recall", "precision", &series))?;
            written.push(p);
        }
    }
    if let Some(points) = sweep {
        let p = dir.join("sweep.csv");
        write_file(&p, &sweep_csv(points))?;
        written.push(p);
        if svg {
            let fp = points.iter().map(|q| (q.tau, q.fp as f64)).collect();
            let fn_ = points.iter().map(|q| (q.tau, q.fn_ as f64)).collect();
            let p = dir.join("sweep.svg");
            let chart = line_chart_svg(
                "errors by score threshold",
                "score threshold",
                "count",
                &[("FP".to_string(), fp), ("FN".to_string(), fn_)],
            );
            write_file(&p, &chart)?;
            written.push(p);
        }
    }
    Ok(written)
}
