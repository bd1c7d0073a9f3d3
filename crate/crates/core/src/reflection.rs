//! Mirror reflection off vehicle edges and iterative unfolding of multipath
//! radar returns.
//!
//! A dynamic return seen through a reflector appears at the mirror image of
//! the true target. Unfolding walks the ray from the radar, mirrors the point
//! across the first edge it crosses, and repeats from the collision point as
//! a virtual origin until the ray is clear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_edges, AlignedBox, LineSeg, Point2, MIN_SEGMENT_LENGTH};

/// Mirror image of `p` across the infinite line through `seg`, computed as
/// twice the perpendicular foot minus `p`.
pub fn mirror_point(p: Point2, seg: &LineSeg) -> Result<Point2> {
    if seg.length() <= MIN_SEGMENT_LENGTH {
        return Err(Error::Logic(
            "cannot mirror across a degenerate segment".into(),
        ));
    }
    let foot = seg.project_onto_line(p);
    Ok(foot * 2.0 - p)
}

/// Mirror image across `y = alpha x + beta` in slope-intercept form.
///
/// `x' = (2x + 2 alpha (y - beta)) / (alpha^2 + 1) - x` and
/// `y' = 2 (alpha (x' + x) / 2 + beta) - y`, i.e. the image is placed so the
/// midpoint of `p` and `p'` lies on the line.
pub fn mirror_point_slope_intercept(p: Point2, alpha: f64, beta: f64) -> Point2 {
    let x = (2.0 * p.x + 2.0 * alpha * (p.y - beta)) / (alpha * alpha + 1.0) - p.x;
    let y = 2.0 * (alpha * (x + p.x) / 2.0 + beta) - p.y;
    Point2::new(x, y)
}

/// A ray/edge collision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub point: Point2,
    pub edge: LineSeg,
    pub box_index: usize,
    /// Index into [`box_edges`] order.
    pub edge_index: usize,
    /// Parameter along the query segment, in `(0, 1]`.
    pub t: f64,
}

/// First crossing of the segment `origin -> target` with any box edge.
///
/// Intersections closer than `hit_epsilon` (meters) to `origin` are ignored so
/// a ray leaving a reflection point does not hit its own edge again. Exact
/// ties (corners) go to the lowest box index, then the lowest edge index.
pub fn first_hit(
    origin: Point2,
    target: Point2,
    structures: &[AlignedBox],
    hit_epsilon: f64,
) -> Option<Hit> {
    let len = origin.distance(target);
    if len <= hit_epsilon {
        return None;
    }
    let mut best: Option<Hit> = None;
    for (bi, b) in structures.iter().enumerate() {
        for (ei, edge) in box_edges(b).iter().enumerate() {
            let Some((t, _)) = edge.intersect(origin, target) else {
                continue;
            };
            if t * len <= hit_epsilon {
                continue;
            }
            if best.as_ref().is_none_or(|h| t < h.t - 1e-12) {
                best = Some(Hit {
                    point: origin.lerp(target, t),
                    edge: *edge,
                    box_index: bi,
                    edge_index: ei,
                    t,
                });
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    pub collision: Point2,
    pub edge: LineSeg,
}

/// The unfolding history of one dynamic return.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionTrace {
    pub input: Point2,
    pub corrected: Point2,
    pub bounces: Vec<Bounce>,
    /// The ray was still obstructed after `max_bounces` reflections.
    pub truncated: bool,
}

impl ReflectionTrace {
    pub fn reflected(&self) -> bool {
        !self.bounces.is_empty()
    }
}

/// Unfolds one dynamic return seen from `origin`.
pub fn unfold(
    point: Point2,
    origin: Point2,
    structures: &[AlignedBox],
    max_bounces: usize,
    hit_epsilon: f64,
) -> Result<ReflectionTrace> {
    if max_bounces == 0 {
        return Err(Error::Config("max_bounces must be at least 1".into()));
    }
    let mut current = point;
    let mut virtual_origin = origin;
    let mut bounces = Vec::new();
    let mut truncated = false;
    while let Some(hit) = first_hit(virtual_origin, current, structures, hit_epsilon) {
        if bounces.len() == max_bounces {
            truncated = true;
            break;
        }
        current = mirror_point(current, &hit.edge)?;
        virtual_origin = hit.point;
        bounces.push(Bounce {
            collision: hit.point,
            edge: hit.edge,
        });
    }
    Ok(ReflectionTrace {
        input: point,
        corrected: current,
        bounces,
        truncated,
    })
}
