//! Planar primitives shared by the alignment solver, the template generator
//! and the guidance overlay. All lengths are millimeters unless a type says
//! otherwise.

use serde::{Deserialize, Serialize};

/// Geometric equality tolerance in millimeters.
pub const GEOMETRY_TOLERANCE_MM: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Axis-aligned rectangle anchored at its top-left corner (+y points down).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn from_corners(a: Point2, b: Point2) -> Self {
        let (x0, x1) = (a.x.min(b.x), a.x.max(b.x));
        let (y0, y1) = (a.y.min(b.y), a.y.max(b.y));
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn top_left(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x, self.y),
            Point2::new(self.right(), self.y),
            Point2::new(self.right(), self.bottom()),
            Point2::new(self.x, self.bottom()),
        ]
    }

    pub fn union(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    pub fn expand(&self, margin: f64) -> Rect {
        Rect::new(self.x - margin, self.y - margin, self.width + 2.0 * margin, self.height + 2.0 * margin)
    }

    /// Closed containment with a slack of `tol` on every side.
    pub fn contains_point(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.x - tol && p.x <= self.right() + tol && p.y >= self.y - tol && p.y <= self.bottom() + tol
    }

    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.x >= self.x - tol
            && other.y >= self.y - tol
            && other.right() <= self.right() + tol
            && other.bottom() <= self.bottom() + tol
    }

    /// Depth by which `p` lies inside the open rectangle: the distance to the
    /// nearest edge, or a non-positive number when `p` is outside or on it.
    pub fn interior_depth(&self, p: Point2) -> f64 {
        let dx = (p.x - self.x).min(self.right() - p.x);
        let dy = (p.y - self.y).min(self.bottom() - p.y);
        dx.min(dy)
    }

    /// Overlap of the two rectangles along x and y. Both positive means the
    /// interiors intersect.
    pub fn overlap_extents(&self, other: &Rect) -> (f64, f64) {
        let ox = self.right().min(other.right()) - self.x.max(other.x);
        let oy = self.bottom().min(other.bottom()) - self.y.max(other.y);
        (ox, oy)
    }
}

/// Quarter-turn rotation applied to a device footprint, clockwise as seen
/// on the page (+x right, +y down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u32 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: u32) -> Option<Rotation> {
        match deg % 360 {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    pub fn then(self, other: Rotation) -> Rotation {
        Rotation::from_degrees(self.degrees() + other.degrees()).expect("quarter turns compose")
    }

    /// Footprint `(width, length)` after rotation.
    pub fn footprint(self, width: f64, length: f64) -> (f64, f64) {
        match self {
            Rotation::R0 | Rotation::R180 => (width, length),
            Rotation::R90 | Rotation::R270 => (length, width),
        }
    }

    /// Maps a point given in the unrotated footprint frame into the rotated
    /// footprint frame, both anchored at their own top-left corner.
    pub fn apply(self, p: Point2, width: f64, length: f64) -> Point2 {
        match self {
            Rotation::R0 => p,
            Rotation::R90 => Point2::new(length - p.y, p.x),
            Rotation::R180 => Point2::new(width - p.x, length - p.y),
            Rotation::R270 => Point2::new(p.y, width - p.x),
        }
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = u32::deserialize(d)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation must be 0, 90, 180 or 270, got {deg}")))
    }
}

/// Proper intersection test for two closed segments, including collinear
/// overlap. Shared endpoints count as intersections.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
        (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    }
    fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
        p.x >= a.x.min(b.x) - 1e-12
            && p.x <= a.x.max(b.x) + 1e-12
            && p.y >= a.y.min(b.y) - 1e-12
            && p.y <= a.y.max(b.y) + 1e-12
    }
    let eps = 1e-12;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    (d1.abs() <= eps && on_segment(q1, q2, p1))
        || (d2.abs() <= eps && on_segment(q1, q2, p2))
        || (d3.abs() <= eps && on_segment(p1, p2, q1))
        || (d4.abs() <= eps && on_segment(p1, p2, q2))
}

/// Rounds to the 3-decimal resolution used by every serialized length.
pub fn round_mm(v: f64) -> f64 {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
