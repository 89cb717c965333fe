use super::{GeometryError, Point2, Polygon, Result};

/// `(x, y) -> (a*x + b*y + tx, c*x + d*y + ty)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub c: f64,
    pub d: f64,
    pub ty: f64,
}

impl Default for AffineMap {
    fn default() -> Self {
        Self::identity()
    }
}

/// `(cos, sin)` with exact values at multiples of 90 degrees.
fn cos_sin_degrees(degrees: f64) -> (f64, f64) {
    let r = degrees.rem_euclid(360.0);
    if r == 0.0 {
        (1.0, 0.0)
    } else if r == 90.0 {
        (0.0, 1.0)
    } else if r == 180.0 {
        (-1.0, 0.0)
    } else if r == 270.0 {
        (0.0, -1.0)
    } else {
        let rad = degrees.to_radians();
        (rad.cos(), rad.sin())
    }
}

impl AffineMap {
    pub const fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            tx: 0.0,
            c: 0.0,
            d: 1.0,
            ty: 0.0,
        }
    }

    pub const fn translation(dx: f64, dy: f64) -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            tx: dx,
            c: 0.0,
            d: 1.0,
            ty: dy,
        }
    }

    pub const fn scale(sx: f64, sy: f64) -> Self {
        Self {
            a: sx,
            b: 0.0,
            tx: 0.0,
            c: 0.0,
            d: sy,
            ty: 0.0,
        }
    }

    /// Rotation about the origin by `degrees`, matrix `[cos -sin; sin cos]`.
    /// With `y` pointing down, positive angles turn clockwise on screen.
    pub fn rotation(degrees: f64) -> Self {
        Self::rotation_about(Point2::new(0.0, 0.0), degrees)
    }

    /// Rotation about `center`; the center is a fixed point.
    pub fn rotation_about(center: Point2, degrees: f64) -> Self {
        let (cos, sin) = cos_sin_degrees(degrees);
        Self {
            a: cos,
            b: -sin,
            tx: center.x - (cos * center.x - sin * center.y),
            c: sin,
            d: cos,
            ty: center.y - (sin * center.x + cos * center.y),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            self.a * p.x + self.b * p.y + self.tx,
            self.c * p.x + self.d * p.y + self.ty,
        )
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            a: next.a * self.a + next.b * self.c,
            b: next.a * self.b + next.b * self.d,
            tx: next.a * self.tx + next.b * self.ty + next.tx,
            c: next.c * self.a + next.d * self.c,
            d: next.c * self.b + next.d * self.d,
            ty: next.c * self.tx + next.d * self.ty + next.ty,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(GeometryError::Singular(det));
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Ok(AffineMap {
            a,
            b,
            tx: -(a * self.tx + b * self.ty),
            c,
            d,
            ty: -(c * self.tx + d * self.ty),
        })
    }
}

/// Maps every vertex, keeping order.
pub fn apply_affine(p: &Polygon, m: &AffineMap) -> Polygon {
    Polygon::from_vertices_unchecked(p.vertices().iter().map(|&v| m.apply(v)).collect())
}
