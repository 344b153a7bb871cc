//! Chords of the unit circle and crossing predicates.
//!
//! A chord is stored as its left endpoint angle `alpha` plus the half angle
//! `theta` it subtends at the centre. The second endpoint sits
//! counterclockwise at `alpha + 2 theta`. Because `theta <= pi/2` the
//! counterclockwise arc from the first to the second endpoint is always the
//! minor arc, and the chord lies at distance `cos theta` from the origin.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An angle normalized to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Angle(normalize_angle(radians))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Floating remainder into `[0, 2pi)`. Exactly `2pi` maps to `0`.
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn on_circle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2 { x: c, y: s }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when
/// counterclockwise.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.sub(a).norm();
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    let proj = Point2::new(a.x + t * ab.x, a.y + t * ab.y);
    p.sub(proj).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    left: Angle,
    half_angle: f64,
}

impl Chord {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha.is_finite() && theta > 0.0 && theta <= FRAC_PI_2) {
            return Err(Error::InvalidChord(theta));
        }
        Ok(Chord { left: Angle::new(alpha), half_angle: theta })
    }

    /// Builds the chord joining two points on the circle given by angle.
    /// The endpoint order does not matter.
    pub fn from_endpoints(a: f64, b: f64) -> Result<Self> {
        let a = normalize_angle(a);
        let b = normalize_angle(b);
        let ccw = normalize_angle(b - a);
        if ccw <= std::f64::consts::PI {
            Chord::new(a, ccw / 2.0)
        } else {
            Chord::new(b, (TAU - ccw) / 2.0)
        }
    }

    pub fn alpha(&self) -> f64 {
        self.left.value()
    }

    pub fn theta(&self) -> f64 {
        self.half_angle
    }

    /// `(left endpoint, other endpoint)`.
    pub fn endpoints(&self) -> (Angle, Angle) {
        (self.left, Angle::new(self.left.value() + 2.0 * self.half_angle))
    }

    pub fn to_cartesian(&self) -> (Point2, Point2) {
        let (a, b) = self.endpoints();
        (Point2::on_circle(a.value()), Point2::on_circle(b.value()))
    }

    pub fn rotated(&self, offset: f64) -> Chord {
        Chord { left: Angle::new(self.left.value() + offset), half_angle: self.half_angle }
    }
}

/// Strictly inside the counterclockwise arc from `a` to `b`.
#[inline]
fn strictly_inside_arc(x: f64, a: f64, b: f64) -> bool {
    if a < b {
        a < x && x < b
    } else {
        x > a || x < b
    }
}

/// Arc interleaving test on normalized endpoint pairs. Any shared endpoint
/// yields `false`.
#[inline]
pub(crate) fn interleaved(a1: f64, b1: f64, a2: f64, b2: f64) -> bool {
    if a1 == a2 || a1 == b2 || b1 == a2 || b1 == b2 {
        return false;
    }
    strictly_inside_arc(a2, a1, b1) != strictly_inside_arc(b2, a1, b1)
}

/// True iff the two chords cross strictly inside the disc.
pub fn crosses(c1: &Chord, c2: &Chord) -> bool {
    let (a1, b1) = c1.endpoints();
    let (a2, b2) = c2.endpoints();
    interleaved(a1.value(), b1.value(), a2.value(), b2.value())
}

/// Independent crossing test on Cartesian endpoints using orientation
/// signs. Only proper intersections count; touching and collinear contacts
/// are reported as no crossing.
pub fn crosses_cartesian(c1: &Chord, c2: &Chord) -> bool {
    let (p1, q1) = c1.to_cartesian();
    let (p2, q2) = c2.to_cartesian();
    let d1 = orient(p1, q1, p2);
    let d2 = orient(p1, q1, q2);
    let d3 = orient(p2, q2, p1);
    let d4 = orient(p2, q2, q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Minimum distance from any endpoint of one chord to the other chord's
/// segment. Below ~1e-9 the floating predicates may legitimately disagree.
pub fn degeneracy_margin(c1: &Chord, c2: &Chord) -> f64 {
    let (p1, q1) = c1.to_cartesian();
    let (p2, q2) = c2.to_cartesian();
    point_segment_distance(p1, p2, q2)
        .min(point_segment_distance(q1, p2, q2))
        .min(point_segment_distance(p2, p1, q1))
        .min(point_segment_distance(q2, p1, q1))
}

/// Intersection of the two supporting lines, if the chords cross.
pub fn intersection_point(c1: &Chord, c2: &Chord) -> Option<Point2> {
    if !crosses(c1, c2) {
        return None;
    }
    let (p1, q1) = c1.to_cartesian();
    let (p2, q2) = c2.to_cartesian();
    let r = q1.sub(p1);
    let s = q2.sub(p2);
    let denom = r.x * s.y - r.y * s.x;
    if denom == 0.0 {
        return None;
    }
    let w = p2.sub(p1);
    let t = (w.x * s.y - w.y * s.x) / denom;
    Some(Point2::new(p1.x + t * r.x, p1.y + t * r.y))
}
