mod common;

use std::collections::HashSet;

use common::{load_bundle, load_dets, read_fixture};
use proptest::prelude::*;
use segeval::dataset::{
    class_histogram, detections_to_json, parse_detections, parse_manifest, parse_via, split, to_via, validate,
    validate_with_manifest, ClassRegistry, DatasetBundle, DatasetError, IssueKind, Severity, SplitSizes,
    DEFAULT_ATTRIBUTE_KEY,
};

fn reparse(b: &DatasetBundle) -> DatasetBundle {
    let text = serde_json::to_string(&to_via(b, DEFAULT_ATTRIBUTE_KEY)).unwrap();
    parse_via(&text, &b.registry, DEFAULT_ATTRIBUTE_KEY, None).unwrap()
}

#[test]
fn via_round_trip_is_lossless() {
    for name in ["ap10_gt.json", "threshold_gt.json", "reference_sample_via.json", "accuracy_gt.json"] {
        let b = load_bundle(name);
        assert_eq!(reparse(&b), b, "{name}");
    }
}

#[test]
fn detections_round_trip() {
    let b = load_bundle("ap10_gt.json");
    let dets = load_dets("ap10_pred.json", &b);
    let text = serde_json::to_string(&detections_to_json(&dets, &b.registry)).unwrap();
    assert_eq!(parse_detections(&text, &b.registry).unwrap(), dets);
}

#[test]
fn parsed_bundles_have_no_dangling_references() {
    for name in ["ap10_gt.json", "class_counts_via.json", "dangling_via.json"] {
        let b = load_bundle(name);
        let names: HashSet<&str> = b.images.iter().map(|i| i.file_name.as_str()).collect();
        assert!(b.annotations.iter().all(|a| names.contains(a.image_ref.as_str())), "{name}");
        assert!(validate(&b).iter().all(|i| i.kind != IssueKind::DanglingImageRef));
    }
}

#[test]
fn manifest_exposes_dangling_reference() {
    let b = load_bundle("dangling_via.json");
    let m = parse_manifest(&read_fixture("dangling_manifest.csv")).unwrap();
    let issues = validate_with_manifest(&b, &m);
    let dangling: Vec<_> = issues
        .iter()
        .filter(|i| i.kind == IssueKind::DanglingImageRef && i.severity == Severity::Error)
        .collect();
    assert_eq!(dangling.len(), 1, "{issues:?}");
    assert!(dangling[0].location.contains("unlisted.png") || dangling[0].message.contains("unlisted.png"));
}

#[test]
fn histogram_of_class_count_fixture() {
    let h = class_histogram(&load_bundle("class_counts_via.json"));
    let want = [
        ("placking_low", 120),
        ("placking_medium", 121),
        ("placking_high", 403),
        ("compression", 827),
        ("core_out", 278),
        ("chafing", 54),
    ];
    for (name, n) in want {
        assert_eq!(h.count(name), Some(n), "{name}");
    }
    assert_eq!(h.total, 1803);
    assert_eq!(h.counts.iter().map(|(_, c)| c).sum::<usize>(), h.total);
}

#[test]
fn split_rejects_wrong_total() {
    let b = load_bundle("ap10_gt.json");
    assert!(matches!(
        split(&b, SplitSizes::new(5, 3, 1), 0),
        Err(DatasetError::SplitSizes { expected: 10, actual: 9 })
    ));
}

#[test]
fn malformed_inputs_are_errors() {
    let reg = ClassRegistry::rope_defects();
    assert!(matches!(parse_via("[1]", &reg, DEFAULT_ATTRIBUTE_KEY, None), Err(DatasetError::Parse { .. })));
    assert!(matches!(parse_via("{", &reg, DEFAULT_ATTRIBUTE_KEY, None), Err(DatasetError::Json(_))));
    let unknown = r#"{"a.png1": {"filename": "a.png", "size": 1, "regions": [{"shape_attributes": {"name": "polygon",
        "all_points_x": [0, 4, 4], "all_points_y": [0, 0, 4]}, "region_attributes": {"label": "rust"}}]}}"#;
    assert!(matches!(parse_via(unknown, &reg, DEFAULT_ATTRIBUTE_KEY, None), Err(DatasetError::UnknownClass { .. })));
    let bad_score = r#"[{"image": "a.png", "category": "chafing", "score": 1.5, "bbox": [0, 0, 2, 2]}]"#;
    assert!(matches!(parse_detections(bad_score, &reg), Err(DatasetError::ScoreOutOfRange { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_partitions_every_image(seed in any::<u64>(), a in 0usize..=10, b in 0usize..=10) {
        let bundle = load_bundle("ap10_gt.json");
        prop_assume!(a + b <= 10);
        let sizes = SplitSizes::new(a, b, 10 - a - b);
        let parts = split(&bundle, sizes, seed).unwrap();
        prop_assert_eq!(parts.clone(), split(&bundle, sizes, seed).unwrap());
        let lens: Vec<usize> = parts.iter().map(|p| p.images.len()).collect();
        prop_assert_eq!(lens, vec![a, b, 10 - a - b]);
        let mut seen = HashSet::new();
        for p in &parts {
            for i in &p.images {
                prop_assert!(seen.insert(i.file_name.clone()));
            }
            let names: HashSet<&str> = p.images.iter().map(|i| i.file_name.as_str()).collect();
            prop_assert!(p.annotations.iter().all(|x| names.contains(x.image_ref.as_str())));
        }
        prop_assert_eq!(seen.len(), 10);
        let anns: usize = parts.iter().map(|p| p.annotations.len()).sum();
        prop_assert_eq!(anns, bundle.annotations.len());
    }

    #[test]
    fn histogram_total_counts_every_annotation(seed in any::<u64>(), keep in 1usize..10) {
        let bundle = load_bundle("ap10_gt.json");
        let parts = split(&bundle, SplitSizes::new(keep, 10 - keep, 0), seed).unwrap();
        for p in &parts {
            let h = class_histogram(p);
            prop_assert_eq!(h.total, p.annotations.len());
            prop_assert_eq!(h.counts.iter().map(|(_, c)| c).sum::<usize>(), h.total);
        }
    }
}
