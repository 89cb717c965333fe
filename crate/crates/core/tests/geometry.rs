mod common;

use common::{bitmap_iou, pip_bitmap, random_star};
use proptest::prelude::*;
use segeval::geometry::{
    apply_affine, box_iou, clip_polygon_to_frame, mask_iou, polygon_area, polygon_bbox, rasterize, AffineMap, BoundingBox,
    GeometryError, Point2, Polygon, RasterMask,
};
use segeval::rng::RngState;

fn star(seed: u64, w: u32, h: u32, pad: f64) -> Polygon {
    random_star(&mut RngState::new(seed), w, h, pad)
}

fn box_strategy() -> impl Strategy<Value = BoundingBox> {
    (0.0..100.0f64, 0.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64)
        .prop_map(|(x, y, w, h)| BoundingBox::from_xywh(x, y, w, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raster_matches_point_in_polygon(seed in any::<u64>(), w in 1u32..64, h in 1u32..64) {
        let p = star(seed, w, h, -4.0);
        let m = rasterize(&p, w, h);
        let oracle = pip_bitmap(&p, w, h);
        prop_assert_eq!(m.to_bits(), oracle.clone());
        prop_assert_eq!(m.pixel_count(), oracle.iter().filter(|b| **b).count() as u64);
    }

    #[test]
    fn rle_round_trips_through_bits(seed in any::<u64>(), w in 1u32..48, h in 1u32..48) {
        let m = rasterize(&star(seed, w, h, 0.0), w, h);
        prop_assert_eq!(RasterMask::from_bits(w, h, &m.to_bits()), m);
    }

    #[test]
    fn mask_iou_is_a_symmetric_ratio(s1 in any::<u64>(), s2 in any::<u64>(), w in 4u32..48, h in 4u32..48) {
        let a = rasterize(&star(s1, w, h, 0.0), w, h);
        let b = rasterize(&star(s2, w, h, 0.0), w, h);
        let ab = mask_iou(&a, &b).unwrap();
        prop_assert_eq!(ab.to_bits(), mask_iou(&b, &a).unwrap().to_bits());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, bitmap_iou(&a.to_bits(), &b.to_bits()));
        if !a.is_empty() {
            prop_assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn box_iou_matches_closed_form(a in box_strategy(), b in box_strategy()) {
        let iw = (a.x_max().min(b.x_max()) - a.x_min().max(b.x_min())).max(0.0);
        let ih = (a.y_max().min(b.y_max()) - a.y_min().max(b.y_min())).max(0.0);
        let want = iw * ih / (a.area() + b.area() - iw * ih);
        let got = box_iou(&a, &b);
        prop_assert!((got - want).abs() < 1e-12);
        prop_assert_eq!(got.to_bits(), box_iou(&b, &a).to_bits());
        prop_assert_eq!(box_iou(&a, &a), 1.0);
    }

    #[test]
    fn clipping_stays_in_frame_and_shrinks(seed in any::<u64>(), w in 4u32..64, h in 4u32..64) {
        let p = star(seed, w, h, -10.0);
        if let Some(c) = clip_polygon_to_frame(&p, w, h) {
            for v in c.vertices() {
                prop_assert!(v.x >= 0.0 && v.x <= w as f64 && v.y >= 0.0 && v.y <= h as f64);
            }
            prop_assert!(polygon_area(&c) <= polygon_area(&p) + 1e-9);
            let again = clip_polygon_to_frame(&c, w, h).unwrap();
            prop_assert_eq!(again, c.clone());
            prop_assert_eq!(rasterize(&c, w, h).pixel_count(), rasterize(&p, w, h).pixel_count());
        }
    }

    #[test]
    fn rotation_inverts(seed in any::<u64>(), deg in -180.0..180.0f64) {
        let p = star(seed, 50, 50, 0.0);
        let c = Point2::new(25.0, 25.0);
        let back = apply_affine(&apply_affine(&p, &AffineMap::rotation_about(c, deg)), &AffineMap::rotation_about(c, -deg));
        for (u, v) in p.vertices().iter().zip(back.vertices()) {
            prop_assert!((u.x - v.x).abs() < 1e-9 && (u.y - v.y).abs() < 1e-9);
        }
        prop_assert!((polygon_area(&back) - polygon_area(&p)).abs() < 1e-6);
    }

    #[test]
    fn rectangle_area_equals_box_area(x in -50.0..50.0f64, y in -50.0..50.0f64, w in 0.01..80.0f64, h in 0.01..80.0f64, start in 0usize..4) {
        let mut xs = vec![x, x + w, x + w, x];
        let mut ys = vec![y, y, y + h, y + h];
        xs.rotate_left(start);
        ys.rotate_left(start);
        let p = Polygon::from_xy(&xs, &ys).unwrap();
        prop_assert_eq!(polygon_area(&p), polygon_bbox(&p).unwrap().area());
    }

    #[test]
    fn pixel_count_tracks_area(seed in any::<u64>(), w in 4u32..96, h in 4u32..96) {
        let p = star(seed, w, h, 0.0);
        let n = rasterize(&p, w, h).pixel_count() as f64;
        prop_assert!((n - polygon_area(&p)).abs() <= p.perimeter() + 4.0);
    }

    #[test]
    fn bbox_encloses_polygon(seed in any::<u64>()) {
        let p = star(seed, 40, 40, 0.0);
        let b = polygon_bbox(&p).unwrap();
        for v in p.vertices() {
            prop_assert!(v.x >= b.x_min() && v.x <= b.x_max() && v.y >= b.y_min() && v.y <= b.y_max());
        }
        prop_assert!(b.area() >= polygon_area(&p));
    }
}

#[test]
fn quarter_turns_are_exact() {
    let p = star(3, 30, 30, 0.0);
    let c = Point2::new(15.0, 15.0);
    let mut q = p.clone();
    for _ in 0..4 {
        q = apply_affine(&q, &AffineMap::rotation_about(c, 90.0));
    }
    assert_eq!(q, p);
}

#[test]
fn positive_angles_turn_clockwise_on_screen() {
    let m = AffineMap::rotation(90.0);
    let r = m.apply(Point2::new(1.0, 0.0));
    assert_eq!((r.x, r.y), (0.0, 1.0));
}

#[test]
fn half_open_pixel_rule() {
    let square = Polygon::from_xy(&[1.0, 3.0, 3.0, 1.0], &[1.0, 1.0, 3.0, 3.0]).unwrap();
    let m = rasterize(&square, 4, 4);
    assert_eq!(m.pixel_count(), 4);
    assert!(m.contains(1, 1) && m.contains(2, 2) && !m.contains(0, 0) && !m.contains(3, 3));
    let edge = Polygon::from_xy(&[0.5, 2.5, 2.5, 0.5], &[0.5, 0.5, 2.5, 2.5]).unwrap();
    assert_eq!(rasterize(&edge, 4, 4).to_bits(), pip_bitmap(&edge, 4, 4));
}

#[test]
fn frame_mismatch_is_an_error() {
    let a = RasterMask::empty(4, 4);
    let b = RasterMask::empty(4, 5);
    assert!(matches!(mask_iou(&a, &b), Err(GeometryError::FrameMismatch(4, 4, 4, 5))));
}

#[test]
fn invalid_polygons_are_rejected() {
    assert!(matches!(Polygon::from_xy(&[0.0, 1.0], &[0.0, 1.0]), Err(GeometryError::TooFewVertices(2))));
    assert!(matches!(Polygon::from_xy(&[0.0, 1.0, 1.0], &[0.0, 1.0]), Err(GeometryError::LengthMismatch { .. })));
    assert!(Polygon::from_xy(&[0.0, f64::NAN, 1.0], &[0.0, 1.0, 2.0]).is_err());
    assert!(BoundingBox::new(1.0, 1.0, 1.0, 2.0).is_err());
}

#[test]
fn clip_triangle_by_hand() {
    let t = Polygon::from_xy(&[-2.0, 2.0, 2.0], &[1.0, 1.0, 3.0]).unwrap();
    let c = clip_polygon_to_frame(&t, 4, 4).unwrap();
    let got: Vec<(f64, f64)> = c.vertices().iter().map(|v| (v.x, v.y)).collect();
    let want = [(0.0, 1.0), (2.0, 1.0), (2.0, 3.0), (0.0, 2.0)];
    let k = got.iter().position(|v| *v == want[0]).expect("starts somewhere");
    let rotated: Vec<(f64, f64)> = got[k..].iter().chain(&got[..k]).copied().collect();
    assert_eq!(rotated, want);
    assert_eq!(polygon_area(&c), 3.0);
    assert_eq!(rasterize(&c, 4, 4), rasterize(&t, 4, 4));
}
