//! Sutherland-Hodgman clipping against the image frame.

use super::{Point2, Polygon};

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right(f64),
    Top,
    Bottom(f64),
}

impl Side {
    fn inside(self, p: Point2) -> bool {
        match self {
            Side::Left => p.x >= 0.0,
            Side::Right(w) => p.x <= w,
            Side::Top => p.y >= 0.0,
            Side::Bottom(h) => p.y <= h,
        }
    }

    fn crossing(self, a: Point2, b: Point2) -> Point2 {
        match self {
            Side::Left | Side::Right(_) => {
                let x = if let Side::Right(w) = self { w } else { 0.0 };
                let t = (x - a.x) / (b.x - a.x);
                Point2::new(x, a.y + t * (b.y - a.y))
            }
            Side::Top | Side::Bottom(_) => {
                let y = if let Side::Bottom(h) = self { h } else { 0.0 };
                let t = (y - a.y) / (b.y - a.y);
                Point2::new(a.x + t * (b.x - a.x), y)
            }
        }
    }
}

fn clip_side(input: &[Point2], side: Side) -> Vec<Point2> {
    let n = input.len();
    let mut out = Vec::with_capacity(n + 4);
    for i in 0..n {
        let cur = input[i];
        let next = input[(i + 1) % n];
        let (cin, nin) = (side.inside(cur), side.inside(next));
        if cin {
            out.push(cur);
        }
        if cin != nin {
            out.push(side.crossing(cur, next));
        }
    }
    out
}

/// Drops repeated vertices and vertices collinear with their neighbours.
fn simplify(mut pts: Vec<Point2>) -> Vec<Point2> {
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let mut keep = Vec::with_capacity(n);
        let mut changed = false;
        for i in 0..n {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let cross = (cur.x - prev.x) * (next.y - cur.y) - (cur.y - prev.y) * (next.x - cur.x);
            if cur == prev || cross == 0.0 {
                // remove one vertex per pass at a time so neighbours stay valid
                changed = true;
                keep.extend_from_slice(&pts[i + 1..]);
                break;
            }
            keep.push(cur);
        }
        if !changed {
            return pts;
        }
        pts = keep;
    }
}

/// Clips `p` to `[0, width] x [0, height]`.
///
/// Returns `None` when nothing with positive extent remains. A polygon that
/// already lies inside the frame is returned unchanged.
pub fn clip_polygon_to_frame(p: &Polygon, width: u32, height: u32) -> Option<Polygon> {
    let (w, h) = (width as f64, height as f64);
    let inside = p
        .vertices()
        .iter()
        .all(|v| v.x >= 0.0 && v.x <= w && v.y >= 0.0 && v.y <= h);
    if inside {
        return Some(p.clone());
    }
    let mut pts = p.vertices().to_vec();
    for side in [Side::Left, Side::Right(w), Side::Top, Side::Bottom(h)] {
        pts = clip_side(&pts, side);
        if pts.is_empty() {
            return None;
        }
    }
    let pts = simplify(pts);
    if pts.len() < 3 {
        return None;
    }
    Some(Polygon::from_vertices_unchecked(pts))
}
