mod common;

use std::path::Path;

use common::{fixture, load_bundle, load_dets};
use segeval::cli::{run_with_io, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use segeval::dataset::{class_histogram, detections_to_json};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("segeval").chain(args.iter().copied());
    let code = run_with_io(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fx(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_reports_and_exits() {
    let (code, out, _) = cli(&["validate", &fx("ap10_gt.json")]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out, err) = cli(&["validate", &fx("dangling_via.json"), "--manifest", &fx("dangling_manifest.csv")]);
    assert_eq!(code, EXIT_DATA);
    assert_eq!(out.lines().filter(|l| l.starts_with("error")).count(), 1, "{out}");
    assert!(out.contains("unlisted.png"));
    assert!(!err.is_empty());
}

#[test]
fn stats_totals_match_histogram() {
    for name in ["class_counts_via.json", "ap10_gt.json", "accuracy_gt.json"] {
        let (code, out, _) = cli(&["stats", &fx(name)]);
        assert_eq!(code, EXIT_OK);
        let h = class_histogram(&load_bundle(name));
        let total = out.lines().find(|l| l.starts_with("total")).unwrap();
        assert_eq!(total.split_whitespace().last().unwrap(), h.total.to_string(), "{name}");
        for (class, n) in &h.counts {
            let line = out.lines().find(|l| l.split_whitespace().next() == Some(class)).unwrap();
            assert_eq!(line.split_whitespace().last().unwrap(), n.to_string());
        }
    }
}

#[test]
fn eval_prints_table_by_default() {
    let (code, out, err) = cli(&["eval", "--gt", &fx("perfect_gt.json"), "--pred", &fx("perfect_pred.json")]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "Type | AP | AP50 | AP75 | AP_m | AP_l");
    assert!(lines.iter().any(|l| l.starts_with("Box | 100.00 | 100.00 | 100.00")));
    assert!(lines.iter().any(|l| l.starts_with("Segm | 100.00 | 100.00 | 100.00")));
}

#[test]
fn eval_writes_every_artifact_identically_twice() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("report.json");
        let csv = dir.path().join("report.csv");
        let curves = dir.path().join("curves");
        let (code, out, err) = cli(&[
            "eval",
            "--gt",
            &fx("ap10_gt.json"),
            "--pred",
            &fx("ap10_pred.json"),
            "--out",
            p(&json),
            "--csv",
            p(&csv),
            "--table",
            "--model",
            "m",
            "--curves-dir",
            p(&curves),
            "--svg",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&curves)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files.push(("report.json".into(), std::fs::read(&json).unwrap()));
        files.push(("report.csv".into(), std::fs::read(&csv).unwrap()));
        (out, files)
    };
    let (out1, files1) = run();
    let (out2, files2) = run();
    assert_eq!(out1, out2);
    assert_eq!(files1, files2);
    assert!(files1.iter().any(|(n, _)| n.ends_with(".svg")));
    assert!(files1.iter().any(|(n, _)| n.starts_with("pr_box_compression_iou50")));
    let json: serde_json::Value = serde_json::from_slice(&files1.iter().find(|(n, _)| n == "report.json").unwrap().1).unwrap();
    assert_eq!(json["model"], "m");
    assert_eq!(json["metadata"]["interpolation_points"], 101);
}

#[test]
fn box_eval_ignores_deleted_segmentations() {
    let b = load_bundle("ap10_gt.json");
    let dets = load_dets("ap10_pred.json", &b);
    let mut doc = detections_to_json(&dets, &b.registry);
    for rec in doc.as_array_mut().unwrap() {
        let rec = rec.as_object_mut().unwrap();
        assert!(rec.contains_key("bbox"));
        rec.remove("segmentation");
    }
    let dir = tempfile::tempdir().unwrap();
    let stripped = dir.path().join("boxes.json");
    std::fs::write(&stripped, serde_json::to_string(&doc).unwrap()).unwrap();
    let gt = fx("ap10_gt.json");
    let full = cli(&["eval", "--kind", "box", "--gt", &gt, "--pred", &fx("ap10_pred.json"), "--csv"]);
    let boxes = cli(&["eval", "--kind", "box", "--gt", &gt, "--pred", p(&stripped), "--csv"]);
    assert_eq!(full.0, EXIT_OK, "{}", full.2);
    assert_eq!(full, boxes);
}

#[test]
fn both_kinds_skip_segm_without_polygons() {
    let (code, out, _) = cli(&["eval", "--gt", &fx("threshold_gt.json"), "--pred", &fx("threshold_pred.json")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().any(|l| l.starts_with("Box |")));
    assert!(!out.lines().any(|l| l.starts_with("Segm |")));
}

#[test]
fn sweep_csv_is_monotone_and_stable() {
    let args = ["sweep", "--gt", &fx("threshold_gt.json"), "--pred", &fx("threshold_pred.json")];
    let (code, out, err) = cli(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(cli(&args).1, out);
    let rows: Vec<Vec<String>> = out.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[14][0], "0.7");
    assert_eq!(rows[14][2], "1");
    for w in rows.windows(2) {
        let n = |r: &Vec<String>, i: usize| r[i].parse::<usize>().unwrap();
        assert!(n(&w[1], 1) <= n(&w[0], 1) && n(&w[1], 2) >= n(&w[0], 2));
    }
}

#[test]
fn split_and_augment_rerun_byte_identically() {
    let snapshot = |dir: &Path| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let split_dir = tempfile::tempdir().unwrap();
            let (code, _, err) = cli(&["split", &fx("ap10_gt.json"), "--sizes", "6,2,2", "--seed", "3", "--out-dir", p(split_dir.path())]);
            assert_eq!(code, EXIT_OK, "{err}");
            let aug_dir = tempfile::tempdir().unwrap();
            let (code, _, err) = cli(&[
                "augment",
                "--gt",
                &fx("reference_sample_via.json"),
                "--images",
                p(&fixture("")),
                "--seed",
                "9",
                "--resize",
                "60",
                "--out-dir",
                p(aug_dir.path()),
            ]);
            assert_eq!(code, EXIT_OK, "{err}");
            (snapshot(split_dir.path()), snapshot(aug_dir.path()))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].1.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["annotations.json", "augment_log.json", "reference_sample.png"]);
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["split", &fx("ap10_gt.json"), "--sizes", "1,2", "--out-dir", "x"]).0, EXIT_USAGE);
    assert_eq!(cli(&["eval", "--gt", &fx("ap10_gt.json"), "--pred", &fx("ap10_pred.json"), "--score-thr", "1.5"]).0, EXIT_DATA);
    assert_eq!(cli(&["stats", "/nonexistent/via.json"]).0, EXIT_DATA);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("eval"));
}
