//! Planar primitives shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToroError};

/// Absolute band around the contact distance `2r` inside which two discs
/// count as touching rather than overlapping.
pub const TANGENCY_TOL: f64 = 1e-9;

/// A pose on the tabletop plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn midpoint(&self, other: &Point2) -> Point2 {
        Point2::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Euclidean distance.
pub fn dist(a: Point2, b: Point2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// How two equal discs relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    Overlap,
    /// Centers within [`TANGENCY_TOL`] of exactly `2r` apart.
    Tangent,
    Apart,
}

pub fn contact(a: Point2, b: Point2, r: f64) -> Result<Contact> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ToroError::InvalidParameter(format!(
            "disc radius must be positive, got {r}"
        )));
    }
    let d = dist(a, b);
    let contact = 2.0 * r;
    Ok(if d < contact - TANGENCY_TOL {
        Contact::Overlap
    } else if d > contact + TANGENCY_TOL {
        Contact::Apart
    } else {
        Contact::Tangent
    })
}

/// True iff two discs of radius `r` centered at `a` and `b` intersect.
/// Touching discs are not in collision.
pub fn discs_overlap(a: Point2, b: Point2, r: f64) -> Result<bool> {
    Ok(contact(a, b, r)? == Contact::Overlap)
}

/// Axis-aligned rectangle `[min_x, max_x] x [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub const fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect { min_x, min_y, max_x, max_y }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn min_corner(&self) -> Point2 {
        Point2::new(self.min_x, self.min_y)
    }

    pub fn max_corner(&self) -> Point2 {
        Point2::new(self.max_x, self.max_y)
    }

    /// Whether a disc of radius `r` at `p` lies entirely inside.
    pub fn contains_disc(&self, p: Point2, r: f64) -> bool {
        p.x - r >= self.min_x - TANGENCY_TOL
            && p.x + r <= self.max_x + TANGENCY_TOL
            && p.y - r >= self.min_y - TANGENCY_TOL
            && p.y + r <= self.max_y + TANGENCY_TOL
    }

    /// Whether a disc of radius `r` at `p` lies entirely outside.
    pub fn excludes_disc(&self, p: Point2, r: f64) -> bool {
        p.x + r <= self.min_x + TANGENCY_TOL
            || p.x - r >= self.max_x - TANGENCY_TOL
            || p.y + r <= self.min_y + TANGENCY_TOL
            || p.y - r >= self.max_y - TANGENCY_TOL
    }
}

impl From<[f64; 4]> for Rect {
    fn from(a: [f64; 4]) -> Self {
        Rect::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.min_x, r.min_y, r.max_x, r.max_y]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dist_examples() {
        assert_eq!(dist(Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)), 5.0);
        assert_eq!(dist(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)), 0.0);
        assert_eq!(dist(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)), 1.0);
    }

    #[test]
    fn overlap_examples() {
        let o = Point2::new(0.0, 0.0);
        assert!(discs_overlap(o, Point2::new(1.5, 0.0), 1.0).unwrap());
        assert!(!discs_overlap(o, Point2::new(2.0, 0.0), 1.0).unwrap());
        assert!(discs_overlap(o, o, 0.5).unwrap());
        assert_eq!(contact(o, Point2::new(2.0, 0.0), 1.0).unwrap(), Contact::Tangent);
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        let o = Point2::new(0.0, 0.0);
        assert!(discs_overlap(o, o, 0.0).is_err());
        assert!(discs_overlap(o, o, -1.0).is_err());
        assert!(discs_overlap(o, o, f64::NAN).is_err());
    }

    fn pt() -> impl Strategy<Value = Point2> {
        (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in pt(), b in pt(), c in pt()) {
            prop_assert!(dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9);
            prop_assert_eq!(dist(a, b), dist(b, a));
        }

        #[test]
        fn overlap_is_symmetric(a in pt(), b in pt(), r in 0.01..50.0f64) {
            prop_assert_eq!(discs_overlap(a, b, r).unwrap(), discs_overlap(b, a, r).unwrap());
        }
    }
}
