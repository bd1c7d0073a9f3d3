//! Planar and camera-frame geometry shared by every stage.
//!
//! The ego frame has `x` pointing forward and `y` pointing left; the ground
//! plane is `z = 0`. Vehicles are axis-aligned rectangles in this frame.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segments shorter than this are rejected as degenerate.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

/// A point (or vector) on the ground plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    /// Panics on non-finite input; use [`Point2::try_new`] for untrusted data.
    pub fn new(x: f64, y: f64) -> Self {
        Self::try_new(x, y).expect("non-finite Point2")
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::Validation(format!("non-finite point ({x}, {y})")))
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl TryFrom<[f64; 2]> for Point2 {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Point2::try_new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2 {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2 {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2 {
            x: self.x * s,
            y: self.y * s,
        }
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2 {
            x: -self.x,
            y: -self.y,
        }
    }
}

/// A point in a 3D frame (camera optical frame or lifted ego frame), meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self::try_new(x, y, z).expect("non-finite Point3")
    }

    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Point3 { x, y, z })
        } else {
            Err(Error::Validation(format!(
                "non-finite point ({x}, {y}, {z})"
            )))
        }
    }

    /// Drops the height coordinate.
    pub fn ground(self) -> Point2 {
        Point2 {
            x: self.x,
            y: self.y,
        }
    }

    fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    fn from_vector(v: Vector3<f64>) -> Self {
        Point3 {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }
}

impl TryFrom<[f64; 3]> for Point3 {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Point3::try_new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// A finite line segment. Reflector surfaces are stored this way so vertical
/// edges need no special case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSeg {
    pub a: Point2,
    pub b: Point2,
}

impl LineSeg {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self::try_new(a, b).expect("degenerate LineSeg")
    }

    pub fn try_new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Validation("non-finite segment endpoint".into()));
        }
        if a.distance(b) <= MIN_SEGMENT_LENGTH {
            return Err(Error::Logic(format!("degenerate segment {a} -> {b}")));
        }
        Ok(LineSeg { a, b })
    }

    pub fn direction(&self) -> Point2 {
        self.b - self.a
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    /// Closest point on the segment (not the infinite line) to `p`.
    pub fn closest_point(&self, p: Point2) -> Point2 {
        let d = self.direction();
        let t = ((p - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        self.closest_point(p).distance(p)
    }

    /// Foot of the perpendicular from `p` onto the infinite supporting line.
    pub fn project_onto_line(&self, p: Point2) -> Point2 {
        let d = self.direction();
        let t = (p - self.a).dot(d) / d.dot(d);
        self.a + d * t
    }

    /// Slope/intercept `(alpha, beta)` of `y = alpha x + beta`, or `None` for
    /// vertical lines.
    pub fn slope_intercept(&self) -> Option<(f64, f64)> {
        let d = self.direction();
        if d.x.abs() <= MIN_SEGMENT_LENGTH * d.norm() {
            return None;
        }
        let alpha = d.y / d.x;
        Some((alpha, self.a.y - alpha * self.a.x))
    }

    /// Intersection of the segment `p0 -> p1` with this segment.
    ///
    /// Returns the parameter `t` along `p0 -> p1` and the parameter `u` along
    /// this segment, both in `[0, 1]`. Parallel segments never intersect.
    pub fn intersect(&self, p0: Point2, p1: Point2) -> Option<(f64, f64)> {
        let r = p1 - p0;
        let s = self.direction();
        let denom = r.cross(s);
        if denom.abs() <= 1e-15 * r.norm() * s.norm() {
            return None;
        }
        let q = self.a - p0;
        let t = q.cross(s) / denom;
        let u = q.cross(r) / denom;
        const SLACK: f64 = 1e-12;
        if (-SLACK..=1.0 + SLACK).contains(&t) && (-SLACK..=1.0 + SLACK).contains(&u) {
            Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
        } else {
            None
        }
    }
}

/// Axis-aligned vehicle footprint: `width` is the x-extent and `length` the
/// y-extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct AlignedBox {
    pub center: Point2,
    pub width: f64,
    pub length: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    center: Point2,
    width: f64,
    length: f64,
}

impl TryFrom<BoxRepr> for AlignedBox {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        AlignedBox::try_new(r.center, r.width, r.length)
    }
}

impl From<AlignedBox> for BoxRepr {
    fn from(b: AlignedBox) -> Self {
        BoxRepr {
            center: b.center,
            width: b.width,
            length: b.length,
        }
    }
}

impl AlignedBox {
    pub fn new(center: Point2, width: f64, length: f64) -> Self {
        Self::try_new(center, width, length).expect("invalid AlignedBox")
    }

    pub fn try_new(center: Point2, width: f64, length: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::Validation("non-finite box center".into()));
        }
        if !(width.is_finite() && width > 0.0 && length.is_finite() && length > 0.0) {
            return Err(Error::Validation(format!(
                "box extents must be positive, got width {width}, length {length}"
            )));
        }
        Ok(AlignedBox {
            center,
            width,
            length,
        })
    }

    pub fn from_min_max(min: Point2, max: Point2) -> Result<Self> {
        Self::try_new(min.lerp(max, 0.5), max.x - min.x, max.y - min.y)
    }

    pub fn min(&self) -> Point2 {
        Point2 {
            x: self.center.x - 0.5 * self.width,
            y: self.center.y - 0.5 * self.length,
        }
    }

    pub fn max(&self) -> Point2 {
        Point2 {
            x: self.center.x + 0.5 * self.width,
            y: self.center.y + 0.5 * self.length,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    /// Counter-clockwise from the (min x, min y) corner.
    pub fn corners(&self) -> [Point2; 4] {
        let (lo, hi) = (self.min(), self.max());
        [
            Point2 { x: lo.x, y: lo.y },
            Point2 { x: hi.x, y: lo.y },
            Point2 { x: hi.x, y: hi.y },
            Point2 { x: lo.x, y: hi.y },
        ]
    }

    /// Closed-boundary containment.
    pub fn contains(&self, p: Point2) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    pub fn translated(&self, by: Point2) -> AlignedBox {
        AlignedBox {
            center: self.center + by,
            ..*self
        }
    }

    pub fn inflated(&self, margin: f64) -> AlignedBox {
        AlignedBox {
            center: self.center,
            width: self.width + 2.0 * margin,
            length: self.length + 2.0 * margin,
        }
    }

    /// Distance from `p` to the nearest point of the boundary (zero on an
    /// edge, positive both inside and outside).
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        box_edges(self)
            .iter()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersection_area(&self, other: &AlignedBox) -> f64 {
        let (a0, a1) = (self.min(), self.max());
        let (b0, b1) = (other.min(), other.max());
        let w = (a1.x.min(b1.x) - a0.x.max(b0.x)).max(0.0);
        let h = (a1.y.min(b1.y) - a0.y.max(b0.y)).max(0.0);
        w * h
    }

    pub fn overlaps(&self, other: &AlignedBox) -> bool {
        self.intersection_area(other) > 0.0
    }

    /// Whether the segment `p0 -> p1` passes through the open interior of the
    /// box shrunk by `eps`. Points lying on the boundary do not count.
    pub fn segment_crosses_interior(&self, p0: Point2, p1: Point2, eps: f64) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let lo = [lo.x + eps, lo.y + eps];
        let hi = [hi.x - eps, hi.y - eps];
        if lo[0] >= hi[0] || lo[1] >= hi[1] {
            return false;
        }
        let start = [p0.x, p0.y];
        let d = [p1.x - p0.x, p1.y - p0.y];
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for axis in 0..2 {
            if d[axis].abs() < 1e-15 {
                if start[axis] <= lo[axis] || start[axis] >= hi[axis] {
                    return false;
                }
            } else {
                let mut ta = (lo[axis] - start[axis]) / d[axis];
                let mut tb = (hi[axis] - start[axis]) / d[axis];
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// The four edges of a box, counter-clockwise from the bottom (`y = min`) edge:
/// bottom, right (`x = max`), top, left (`x = min`).
pub fn box_edges(b: &AlignedBox) -> [LineSeg; 4] {
    let c = b.corners();
    [
        LineSeg { a: c[0], b: c[1] },
        LineSeg { a: c[1], b: c[2] },
        LineSeg { a: c[2], b: c[3] },
        LineSeg { a: c[3], b: c[0] },
    ]
}

/// Rigid transform taking ego-frame points into the camera optical frame
/// (`z` forward along the optical axis, `x` right, `y` down).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from a row-major rotation and a translation,
    /// rejecting rotations that are not proper orthonormal matrices.
    pub fn try_new(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        let t = Vector3::from(translation);
        if r.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite transform".into()));
        }
        let ortho_err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho_err > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(
                "rotation is not a proper orthonormal matrix".into(),
            ));
        }
        Ok(RigidTransform {
            rotation: r,
            translation: t,
        })
    }

    /// Rotation about the vertical axis (positive = counter-clockwise seen
    /// from above) followed by a translation.
    pub fn from_yaw(yaw: f64, translation: [f64; 3]) -> Self {
        RigidTransform {
            rotation: *Rotation3::from_axis_angle(&Vector3::z_axis(), yaw).matrix(),
            translation: Vector3::from(translation),
        }
    }

    /// Ego-to-optical transform for a camera mounted at `position` (ego
    /// frame) and looking horizontally along `yaw`.
    pub fn camera_mount(position: Point3, yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        // Rows are the optical axes expressed in ego coordinates.
        let r = Matrix3::new(
            s, -c, 0.0, // x: right
            0.0, 0.0, -1.0, // y: down
            c, s, 0.0, // z: forward
        );
        let t = -(r * position.to_vector());
        RigidTransform {
            rotation: r,
            translation: t,
        }
    }

    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let r = &self.rotation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        Point3::from_vector(self.rotation * p.to_vector() + self.translation)
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    /// Position of the frame origin (the camera center) in the source frame.
    pub fn source_origin(&self) -> Point3 {
        self.inverse().apply(Point3::default())
    }
}

/// Lifts a ground point to `z = 0` and maps it into the camera frame.
pub fn ego_to_camera(p: Point2, extrinsics: &RigidTransform) -> Point3 {
    extrinsics.apply(Point3 {
        x: p.x,
        y: p.y,
        z: 0.0,
    })
}

/// Inverse of the ego-to-camera mapping (keeps the height coordinate).
pub fn camera_to_ego(p: Point3, extrinsics: &RigidTransform) -> Point3 {
    extrinsics.inverse().apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_lifts_to_ground() {
        let p = ego_to_camera(Point2::new(1.0, 2.0), &RigidTransform::identity());
        assert_eq!(p, Point3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn quarter_yaw() {
        let t = RigidTransform::from_yaw(FRAC_PI_2, [0.0; 3]);
        let p = ego_to_camera(Point2::new(1.0, 0.0), &t);
        assert!(p.x.abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15 && p.z == 0.0);
    }

    #[test]
    fn camera_mount_looks_forward() {
        let t = RigidTransform::camera_mount(Point3::new(1.0, 0.5, 1.2), 0.0);
        // A point straight ahead at camera height lands on the optical axis.
        let p = t.apply(Point3::new(4.0, 0.5, 1.2));
        assert!((p.x).abs() < 1e-12 && p.y.abs() < 1e-12 && (p.z - 3.0).abs() < 1e-12);
        // Left of the camera is negative optical x; below is positive y.
        let q = t.apply(Point3::new(4.0, 1.5, 0.2));
        assert!(q.x < 0.0 && q.y > 0.0);
        let c = t.source_origin();
        assert!(
            (c.x - 1.0).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12 && (c.z - 1.2).abs() < 1e-12
        );
    }

    #[test]
    fn rejects_non_orthonormal() {
        let bad = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RigidTransform::try_new(bad, [0.0; 3]).is_err());
        let reflection = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(RigidTransform::try_new(reflection, [0.0; 3]).is_err());
    }

    #[test]
    fn box_edges_of_centered_box() {
        let b = AlignedBox::new(Point2::ORIGIN, 2.0, 4.0);
        let e = box_edges(&b);
        assert_eq!(
            e[0],
            LineSeg::new(Point2::new(-1.0, -2.0), Point2::new(1.0, -2.0))
        );
        assert_eq!(
            e[1],
            LineSeg::new(Point2::new(1.0, -2.0), Point2::new(1.0, 2.0))
        );
        assert_eq!(
            e[2],
            LineSeg::new(Point2::new(1.0, 2.0), Point2::new(-1.0, 2.0))
        );
        assert_eq!(
            e[3],
            LineSeg::new(Point2::new(-1.0, 2.0), Point2::new(-1.0, -2.0))
        );
    }

    #[test]
    fn unit_box_perimeter() {
        let b = AlignedBox::new(Point2::new(0.0, 0.0), 1.0, 1.0);
        let perimeter: f64 = box_edges(&b).iter().map(LineSeg::length).sum();
        assert!((perimeter - 4.0).abs() < 1e-15);
    }

    #[test]
    fn sedan_corners() {
        let b = AlignedBox::new(Point2::new(3.0, 5.0), 1.8, 4.5);
        let expected = [(2.1, 2.75), (3.9, 2.75), (3.9, 7.25), (2.1, 7.25)];
        for (c, (x, y)) in b.corners().iter().zip(expected) {
            assert!((c.x - x).abs() < 1e-12 && (c.y - y).abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn constructors_reject_non_finite() {
        assert!(Point2::try_new(f64::NAN, 0.0).is_err());
        assert!(Point3::try_new(0.0, f64::INFINITY, 0.0).is_err());
        assert!(AlignedBox::try_new(Point2::ORIGIN, 0.0, 1.0).is_err());
        assert!(AlignedBox::try_new(Point2::ORIGIN, 1.0, f64::NAN).is_err());
        assert!(LineSeg::try_new(Point2::ORIGIN, Point2::new(1e-12, 0.0)).is_err());
        assert!(serde_json::from_str::<Point2>("[1.0, 1e999]").is_err());
    }

    #[test]
    fn slope_intercept_forms() {
        let s = LineSeg::new(Point2::new(0.0, 1.0), Point2::new(2.0, 5.0));
        let (a, b) = s.slope_intercept().unwrap();
        assert!((a - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        let v = LineSeg::new(Point2::new(3.0, 0.0), Point2::new(3.0, 1.0));
        assert!(v.slope_intercept().is_none());
    }

    #[test]
    fn interior_crossing_ignores_boundary_contact() {
        let b = AlignedBox::new(Point2::new(2.0, 0.0), 2.0, 2.0);
        // Ends on the near face.
        assert!(!b.segment_crosses_interior(Point2::ORIGIN, Point2::new(1.0, 0.5), 1e-9));
        // Passes through.
        assert!(b.segment_crosses_interior(Point2::ORIGIN, Point2::new(4.0, 0.0), 1e-9));
        // Grazes along an edge.
        assert!(!b.segment_crosses_interior(Point2::new(0.0, 1.0), Point2::new(4.0, 1.0), 1e-9));
    }

    #[test]
    fn iou_building_blocks() {
        let a = AlignedBox::new(Point2::ORIGIN, 2.0, 2.0);
        let b = AlignedBox::new(Point2::new(1.0, 1.0), 2.0, 2.0);
        assert!((a.intersection_area(&b) - 1.0).abs() < 1e-15);
        assert!((a.boundary_distance(Point2::ORIGIN) - 1.0).abs() < 1e-15);
    }
}
