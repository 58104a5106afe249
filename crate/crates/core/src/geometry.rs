//! Planar world geometry: points, segments, square obstacles and a single
//! reflective wall.
//!
//! Obstacles are opaque and never reflect. The wall reflects on both faces
//! and never occludes. Contact with an obstacle boundary, including a graze
//! along an edge or through a corner, counts as blocked.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Builds a vector, rejecting NaN and infinite components.
    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        let v = Self { x, y };
        v.check_finite("vec2")?;
        Ok(v)
    }

    pub(crate) fn check_finite(self, field: &'static str) -> Result<()> {
        if self.x.is_finite() && self.y.is_finite() {
            Ok(())
        } else {
            Err(invalid(field, "coordinates must be finite"))
        }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    /// World-frame direction angle, `atan2(y, x)`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Axis-aligned opaque square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub side: f64,
}

impl Obstacle {
    pub fn new(center: Vec2, side: f64) -> Result<Self> {
        let o = Self { center, side };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        self.center.check_finite("obstacle.center")?;
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(invalid("obstacle.side", format!("must be > 0, got {}", self.side)));
        }
        Ok(())
    }

    pub fn min_corner(&self) -> Vec2 {
        let h = self.side / 2.0;
        Vec2::new(self.center.x - h, self.center.y - h)
    }

    pub fn max_corner(&self) -> Vec2 {
        let h = self.side / 2.0;
        Vec2::new(self.center.x + h, self.center.y + h)
    }

    /// Closed containment test (boundary points are inside).
    pub fn contains(&self, p: Vec2) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    pub fn edges(&self) -> [Segment; 4] {
        let lo = self.min_corner();
        let hi = self.max_corner();
        let c = [lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)];
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }
}

/// Reflective, non-occluding wall segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub endpoint_a: Vec2,
    pub endpoint_b: Vec2,
}

impl Wall {
    pub fn new(endpoint_a: Vec2, endpoint_b: Vec2) -> Result<Self> {
        let w = Self {
            endpoint_a,
            endpoint_b,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        self.endpoint_a.check_finite("wall.endpoint_a")?;
        self.endpoint_b.check_finite("wall.endpoint_b")?;
        if self.endpoint_a == self.endpoint_b {
            return Err(invalid("wall", "endpoints must differ"));
        }
        Ok(())
    }

    pub fn direction(&self) -> Vec2 {
        self.endpoint_b - self.endpoint_a
    }

    /// Unit normal (left of a→b).
    pub fn normal(&self) -> Vec2 {
        let d = self.direction();
        let n = d.norm();
        Vec2::new(-d.y / n, d.x / n)
    }

    /// Signed distance of `p` from the supporting line (positive on the normal side).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal().dot(p - self.endpoint_a)
    }
}

/// Single-bounce path from a source to a receiver via the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedPath {
    pub reflection_point: Vec2,
    /// source → wall
    pub leg1_length: f64,
    /// wall → receiver
    pub leg2_length: f64,
    /// World-frame direction leaving the source toward the wall.
    pub departure_angle: f64,
    /// World-frame direction from the receiver toward the reflection point.
    pub arrival_angle: f64,
}

impl ReflectedPath {
    pub fn total_length(&self) -> f64 {
        self.leg1_length + self.leg2_length
    }
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// For collinear `a`, `b`, `p`: whether `p` lies within the bounding box of `a`–`b`.
fn within_box(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection; collinear overlap and endpoint contact count.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> Result<bool> {
    if s1.is_degenerate() || s2.is_degenerate() {
        return Err(Error::DegenerateSegment);
    }
    let (p1, p2, q1, q2) = (s1.a, s1.b, s2.a, s2.b);
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return Ok(true);
    }
    Ok((d1 == 0.0 && within_box(q1, q2, p1))
        || (d2 == 0.0 && within_box(q1, q2, p2))
        || (d3 == 0.0 && within_box(p1, p2, q1))
        || (d4 == 0.0 && within_box(p1, p2, q2)))
}

fn segment_blocked_by(seg: &Segment, obstacle: &Obstacle) -> bool {
    // A segment starting inside the square is blocked whether or not it
    // reaches an edge.
    if obstacle.contains(seg.a) || obstacle.contains(seg.b) {
        return true;
    }
    let lo = obstacle.min_corner();
    let hi = obstacle.max_corner();
    if seg.a.x.max(seg.b.x) < lo.x
        || seg.a.x.min(seg.b.x) > hi.x
        || seg.a.y.max(seg.b.y) < lo.y
        || seg.a.y.min(seg.b.y) > hi.y
    {
        return false;
    }
    obstacle
        .edges()
        .iter()
        .any(|edge| segments_intersect(seg, edge).unwrap_or(false))
}

/// True iff the segment `p`–`q` touches none of the obstacles.
pub fn los_clear(p: Vec2, q: Vec2, obstacles: &[Obstacle]) -> Result<bool> {
    let seg = Segment::new(p, q);
    if seg.is_degenerate() {
        return Err(Error::DegenerateSegment);
    }
    Ok(!obstacles.iter().any(|o| segment_blocked_by(&seg, o)))
}

/// Reflection of `p` across the infinite line through the wall.
pub fn mirror_across(wall: &Wall, p: Vec2) -> Result<Vec2> {
    let d = wall.signed_distance(p);
    if d.abs() <= 1e-12 {
        return Err(Error::PointOnWallLine);
    }
    Ok(p - wall.normal() * (2.0 * d))
}

/// Shortest single-bounce path via the wall (image method), if the bounce
/// point falls on the wall segment and both legs are unobstructed.
pub fn reflected_path(
    source: Vec2,
    receiver: Vec2,
    wall: &Wall,
    obstacles: &[Obstacle],
) -> Result<Option<ReflectedPath>> {
    let s_src = wall.signed_distance(source);
    let s_rcv = wall.signed_distance(receiver);
    if s_src.abs() <= 1e-12 || s_rcv.abs() <= 1e-12 || s_src.signum() != s_rcv.signum() {
        return Err(Error::OppositeSidesOfWall);
    }
    let image = mirror_across(wall, source)?;

    // receiver → image crosses the wall line where the signed distance hits zero
    let s_img = wall.signed_distance(image);
    let t = s_rcv / (s_rcv - s_img);
    let r = receiver + (image - receiver) * t;

    let dir = wall.direction();
    let u = (r - wall.endpoint_a).dot(dir) / dir.dot(dir);
    if !(0.0..=1.0).contains(&u) {
        return Ok(None);
    }
    if !los_clear(source, r, obstacles)? || !los_clear(r, receiver, obstacles)? {
        return Ok(None);
    }
    Ok(Some(ReflectedPath {
        reflection_point: r,
        leg1_length: source.distance(r),
        leg2_length: r.distance(receiver),
        departure_angle: (r - source).angle(),
        arrival_angle: (r - receiver).angle(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Vec2::new(ax, ay), Vec2::new(bx, by))
    }

    fn sq(cx: f64, cy: f64, side: f64) -> Obstacle {
        Obstacle::new(Vec2::new(cx, cy), side).unwrap()
    }

    fn wall(ax: f64, ay: f64, bx: f64, by: f64) -> Wall {
        Wall::new(Vec2::new(ax, ay), Vec2::new(bx, by)).unwrap()
    }

    #[test]
    fn crossing_parallel_and_collinear_segments() {
        assert!(segments_intersect(&seg(0., 0., 2., 0.), &seg(1., -1., 1., 1.)).unwrap());
        assert!(!segments_intersect(&seg(0., 0., 1., 0.), &seg(0., 1., 1., 1.)).unwrap());
        assert!(segments_intersect(&seg(0., 0., 2., 0.), &seg(1., 0., 3., 0.)).unwrap());
        // collinear but disjoint
        assert!(!segments_intersect(&seg(0., 0., 1., 0.), &seg(2., 0., 3., 0.)).unwrap());
        // T-junction at an endpoint
        assert!(segments_intersect(&seg(0., 0., 2., 0.), &seg(1., 0., 1., 5.)).unwrap());
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        assert_eq!(
            segments_intersect(&seg(1., 1., 1., 1.), &seg(0., 0., 2., 2.)),
            Err(Error::DegenerateSegment)
        );
        assert_eq!(
            los_clear(Vec2::new(1., 1.), Vec2::new(1., 1.), &[]),
            Err(Error::DegenerateSegment)
        );
    }

    #[test]
    fn los_examples() {
        let p = Vec2::new(-40., 40.);
        let q = Vec2::new(0., 40.);
        assert!(!los_clear(p, q, &[sq(-20., 40., 5.)]).unwrap());
        assert!(los_clear(p, q, &[sq(-20., 20., 5.)]).unwrap());
        // bottom edge at y = 39.9 sits just below the segment
        assert!(!los_clear(p, q, &[sq(-20., 42.4, 5.)]).unwrap());
    }

    #[test]
    fn grazing_an_edge_counts_as_blocked() {
        // segment runs exactly along the top edge y = 42.5
        let p = Vec2::new(-40., 42.5);
        let q = Vec2::new(0., 42.5);
        assert!(!los_clear(p, q, &[sq(-20., 40., 5.)]).unwrap());
        // touching a single corner
        let p = Vec2::new(-30., 32.5);
        let q = Vec2::new(-22.5, 37.5);
        assert!(!los_clear(p, q, &[sq(-20., 40., 5.)]).unwrap());
    }

    #[test]
    fn segment_inside_obstacle_is_blocked() {
        let o = sq(0., 0., 10.);
        assert!(!los_clear(Vec2::new(-1., 0.), Vec2::new(1., 1.), &[o]).unwrap());
    }

    #[test]
    fn mirror_examples() {
        let w = wall(-30., 50., 10., 50.);
        let m = mirror_across(&w, Vec2::new(0., 40.)).unwrap();
        assert!((m - Vec2::new(0., 60.)).norm() < 1e-12);

        let w = wall(0., -5., 0., 5.);
        let m = mirror_across(&w, Vec2::new(3., 7.)).unwrap();
        assert!((m - Vec2::new(-3., 7.)).norm() < 1e-12);

        let w = wall(0., 0., 10., 10.);
        let m = mirror_across(&w, Vec2::new(2., 0.)).unwrap();
        assert!((m - Vec2::new(0., 2.)).norm() < 1e-12);
        // the image is equidistant from every point on the mirror line
        for t in [-3.0, 0.5, 7.0] {
            let on_line = Vec2::new(t, t);
            assert!((on_line.distance(m) - on_line.distance(Vec2::new(2., 0.))).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_on_line_is_an_error() {
        let w = wall(-30., 50., 10., 50.);
        assert_eq!(
            mirror_across(&w, Vec2::new(100., 50.)),
            Err(Error::PointOnWallLine)
        );
    }

    #[test]
    fn reflected_path_examples() {
        let src = Vec2::new(0., 40.);
        let rx = Vec2::new(-40., 40.);
        let w = wall(-30., 50., 10., 50.);
        let path = reflected_path(src, rx, &w, &[]).unwrap().unwrap();
        assert!((path.reflection_point - Vec2::new(-20., 50.)).norm() < 1e-9);
        assert!((path.total_length() - 2000f64.sqrt()).abs() < 1e-9);

        let short = wall(5., 50., 10., 50.);
        assert!(reflected_path(src, rx, &short, &[]).unwrap().is_none());

        let blocker = sq(-20., 47., 5.);
        assert!(reflected_path(src, rx, &w, &[blocker]).unwrap().is_none());
    }

    #[test]
    fn reflected_path_rejects_opposite_sides() {
        let w = wall(-30., 50., 10., 50.);
        assert_eq!(
            reflected_path(Vec2::new(0., 40.), Vec2::new(-40., 60.), &w, &[]),
            Err(Error::OppositeSidesOfWall)
        );
    }

    #[test]
    fn reflection_is_specular() {
        let w = wall(-30., 50., 10., 50.);
        let path = reflected_path(Vec2::new(3., 31.), Vec2::new(-40., 40.), &w, &[])
            .unwrap()
            .unwrap();
        let n = w.normal();
        let incoming = Vec2::from_polar(1.0, path.departure_angle);
        let outgoing = -Vec2::from_polar(1.0, path.arrival_angle);
        let inc = incoming.dot(n).abs().acos();
        let out = outgoing.dot(n).abs().acos();
        assert!((inc - out).abs() < 1e-9);
        assert!(w.signed_distance(path.reflection_point).abs() < 1e-9);
    }

    #[test]
    fn invalid_types_are_rejected() {
        assert!(Obstacle::new(Vec2::ZERO, 0.0).is_err());
        assert!(Wall::new(Vec2::ZERO, Vec2::ZERO).is_err());
        assert!(Vec2::try_new(f64::NAN, 0.0).is_err());
    }
}
