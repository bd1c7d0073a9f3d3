//! Parked-vehicle footprint inference.
//!
//! Per frame: camera vehicle cloud -> DBSCAN -> surface classification ->
//! rough center from the standard vehicle size -> grid-search refinement
//! against static radar points -> windowed temporal averaging. The state is
//! frozen once a pedestrian has been detected.

use std::collections::VecDeque;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::camera::vehicle_depth_cloud;
use crate::clustering::dbscan;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::{box_edges, AlignedBox, LineSeg, Point2, RigidTransform};
use crate::sensor::{CameraIntrinsics, DepthGrid, SegMask};

/// Below this x-spread a surface group is fitted as `x = const`.
pub const MIN_X_SPREAD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Some fitted surface is within 45 degrees of the x axis.
    HasHorizontal,
    VerticalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedSurface {
    pub segment: LineSeg,
    /// Slope angle in degrees, in `(-90, 90]`.
    pub slope_deg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceEstimate {
    pub segments: Vec<FittedSurface>,
    pub orientation: Orientation,
}

fn fit_group(points: &[Point2]) -> Option<FittedSurface> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (x_lo, x_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.x), hi.max(p.x))
        });
    let (y_lo, y_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;

    if x_hi - x_lo < MIN_X_SPREAD {
        let seg = LineSeg::try_new(Point2::new(mx, y_lo), Point2::new(mx, y_hi)).ok()?;
        return Some(FittedSurface {
            segment: seg,
            slope_deg: 90.0,
        });
    }
    let sxx: f64 = points.iter().map(|p| (p.x - mx) * (p.x - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let seg = LineSeg::try_new(
        Point2::new(x_lo, alpha * x_lo + beta),
        Point2::new(x_hi, alpha * x_hi + beta),
    )
    .ok()?;
    Some(FittedSurface {
        segment: seg,
        slope_deg: alpha.atan().to_degrees(),
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Splits a vehicle cluster at its median y and fits one line per half.
pub fn classify_surfaces(cluster: &[Point2]) -> Result<SurfaceEstimate> {
    if cluster.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: cluster.len(),
        });
    }
    let mut ys: Vec<f64> = cluster.iter().map(|p| p.y).collect();
    ys.sort_by(f64::total_cmp);
    let split = median(&ys);
    let (lower, upper): (Vec<Point2>, Vec<Point2>) = cluster.iter().partition(|p| p.y <= split);

    let segments: Vec<FittedSurface> = [lower, upper].iter().filter_map(|g| fit_group(g)).collect();
    if segments.is_empty() {
        // Every group collapsed to a single location.
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: cluster.len(),
        });
    }
    let orientation = if segments.iter().any(|s| s.slope_deg.abs() < 45.0) {
        Orientation::HasHorizontal
    } else {
        Orientation::VerticalOnly
    };
    Ok(SurfaceEstimate {
        segments,
        orientation,
    })
}

/// Axis-aligned extents `(min, max)` of a non-empty point set.
pub fn extents(points: &[Point2]) -> Option<(Point2, Point2)> {
    let first = *points.first()?;
    Some(points.iter().skip(1).fold((first, first), |(lo, hi), p| {
        (
            Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

/// Rough vehicle center from cluster extents and the standard size.
///
/// With a near-horizontal surface the nearest face is the `y_min` side;
/// otherwise only the `x_min` side face is seen and the box hangs down from
/// `y_max`.
pub fn rough_center(
    min: Point2,
    max: Point2,
    orientation: Orientation,
    width: f64,
    length: f64,
) -> Point2 {
    match orientation {
        Orientation::HasHorizontal => Point2::new(min.x + 0.5 * width, min.y + 0.5 * length),
        Orientation::VerticalOnly => Point2::new(min.x + 0.5 * width, max.y - 0.5 * length),
    }
}

/// Grid-search refinement parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineParams {
    pub tau: f64,
    pub delta: f64,
    pub step: f64,
}

impl RefineParams {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        RefineParams {
            tau: cfg.refine_tau,
            delta: cfg.refine_delta,
            step: cfg.refine_step,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0 && self.delta > 0.0 && self.step > 0.0 && self.step <= self.delta;
        if ok && self.tau.is_finite() && self.delta.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid refinement parameters {self:?}"
            )))
        }
    }

    /// Number of grid steps on each side of zero.
    pub fn half_steps(&self) -> i64 {
        (self.delta / self.step + 1e-9).floor() as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    pub refined: AlignedBox,
    pub score: usize,
    /// Grid offset of the winner, in steps.
    pub offset_steps: (i64, i64),
    /// No static points fell in the search window; the rough box was kept.
    pub low_confidence: bool,
}

/// Static points inside the `(x_c +- W, y_c +- L)` window of the rough box.
pub fn near_points(rough: &AlignedBox, static_points: &[Point2]) -> Vec<Point2> {
    static_points
        .iter()
        .copied()
        .filter(|p| {
            (p.x - rough.center.x).abs() <= rough.width
                && (p.y - rough.center.y).abs() <= rough.length
        })
        .collect()
}

/// Number of points within `tau` of the candidate's boundary.
pub fn edge_score(candidate: &AlignedBox, points: &[Point2], tau: f64) -> usize {
    let edges = box_edges(candidate);
    points
        .iter()
        .filter(|p| edges.iter().any(|e| e.distance_to(**p) <= tau))
        .count()
}

/// Translates the rough box over a `+-delta` grid and keeps the offset whose
/// edges lie within `tau` of the most nearby static points.
///
/// Ties go to the smallest displacement, then smaller `|dx|`, `|dy|`, then the
/// signed `dx`, `dy`, which makes the order total.
pub fn refine_box(
    rough: &AlignedBox,
    static_points: &[Point2],
    params: RefineParams,
) -> Result<Refinement> {
    params.validate()?;
    let near = near_points(rough, static_points);
    if near.is_empty() {
        return Ok(Refinement {
            refined: *rough,
            score: 0,
            offset_steps: (0, 0),
            low_confidence: true,
        });
    }
    let n = params.half_steps();
    // Larger score wins; the rest of the key is minimized.
    type Key = (usize, i64, i64, i64, i64, i64);
    let mut best: Option<(Key, AlignedBox)> = None;
    for i in -n..=n {
        for j in -n..=n {
            let candidate =
                rough.translated(Point2::new(i as f64 * params.step, j as f64 * params.step));
            let score = edge_score(&candidate, &near, params.tau);
            let key = (usize::MAX - score, i * i + j * j, i.abs(), j.abs(), i, j);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, candidate));
            }
        }
    }
    let ((inv_score, _, _, _, i, j), refined) = best.expect("grid has at least one cell");
    Ok(Refinement {
        refined,
        score: usize::MAX - inv_score,
        offset_steps: (i, j),
        low_confidence: false,
    })
}

/// One tracked parked vehicle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrack {
    pub id: u32,
    /// Most recent per-frame boxes, oldest first, at most `smoothing_window`.
    pub history: VecDeque<AlignedBox>,
    pub smoothed: AlignedBox,
    /// Frames in which this vehicle was observed.
    pub observations: usize,
    /// Consecutive frames without a matching observation.
    pub misses: usize,
}

/// The reflector map used by localization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialState {
    pub tracks: Vec<VehicleTrack>,
    pub fixed: bool,
    next_id: u32,
}

impl SpatialState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state directly from known boxes (e.g. ground truth).
    pub fn from_boxes(boxes: &[AlignedBox]) -> Self {
        let tracks = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| VehicleTrack {
                id: i as u32,
                history: VecDeque::from([*b]),
                smoothed: *b,
                observations: 1,
                misses: 0,
            })
            .collect();
        SpatialState {
            tracks,
            fixed: false,
            next_id: boxes.len() as u32,
        }
    }

    /// Current smoothed footprint of every tracked vehicle.
    pub fn boxes(&self) -> Vec<AlignedBox> {
        self.tracks.iter().map(|t| t.smoothed).collect()
    }
}

fn mean_center(history: &VecDeque<AlignedBox>) -> Point2 {
    let n = history.len() as f64;
    let (sx, sy) = history
        .iter()
        .fold((0.0, 0.0), |(sx, sy), b| (sx + b.center.x, sy + b.center.y));
    Point2::new(sx / n, sy / n)
}

/// Greedy nearest-center association; returns `(track index, box index)`.
fn associate(tracks: &[VehicleTrack], boxes: &[AlignedBox], gate: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (bi, b) in boxes.iter().enumerate() {
            let d = t.smoothed.center.distance(b.center);
            if d <= gate {
                pairs.push((d, ti, bi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_t = vec![false; tracks.len()];
    let mut used_b = vec![false; boxes.len()];
    let mut out = Vec::new();
    for (_, ti, bi) in pairs {
        if !used_t[ti] && !used_b[bi] {
            used_t[ti] = true;
            used_b[bi] = true;
            out.push((ti, bi));
        }
    }
    out
}

/// Appends this frame's boxes and recomputes each vehicle's windowed mean
/// center; W and L come from the configuration.
///
/// Boxes with no track inside the gate open a new track. Tracks not seen
/// this frame keep their previous smoothed box and are dropped after
/// `max_track_misses` consecutive misses. A fixed state is returned
/// unchanged; `pedestrian_detected` fixes the state after this update.
pub fn smooth_and_fix(
    state: &SpatialState,
    new_boxes: &[AlignedBox],
    pedestrian_detected: bool,
    cfg: &PipelineConfig,
) -> SpatialState {
    if state.fixed {
        return state.clone();
    }
    let mut next = state.clone();
    let pairs = associate(&next.tracks, new_boxes, cfg.match_gate);
    let mut seen_track = vec![false; next.tracks.len()];
    let mut seen_box = vec![false; new_boxes.len()];
    for &(ti, bi) in &pairs {
        seen_track[ti] = true;
        seen_box[bi] = true;
        let track = &mut next.tracks[ti];
        track.history.push_back(new_boxes[bi]);
        while track.history.len() > cfg.smoothing_window {
            track.history.pop_front();
        }
        track.observations += 1;
        track.misses = 0;
        track.smoothed = AlignedBox {
            center: mean_center(&track.history),
            width: cfg.vehicle_width,
            length: cfg.vehicle_length,
        };
    }
    for (ti, seen) in seen_track.iter().enumerate() {
        if !seen {
            next.tracks[ti].misses += 1;
        }
    }
    let before = next.tracks.len();
    next.tracks.retain(|t| t.misses <= cfg.max_track_misses);
    if next.tracks.len() < before {
        debug!(
            "dropped {} stale vehicle track(s)",
            before - next.tracks.len()
        );
    }
    for (bi, b) in new_boxes.iter().enumerate() {
        if !seen_box[bi] {
            let id = next.next_id;
            next.next_id += 1;
            debug!("acquired vehicle track {id} at {}", b.center);
            next.tracks.push(VehicleTrack {
                id,
                history: VecDeque::from([*b]),
                smoothed: AlignedBox {
                    center: b.center,
                    width: cfg.vehicle_width,
                    length: cfg.vehicle_length,
                },
                observations: 1,
                misses: 0,
            });
        }
    }
    if pedestrian_detected {
        next.fixed = true;
    }
    next
}

/// Per-frame camera and radar inputs for spatial inference.
#[derive(Clone, Copy, Debug)]
pub struct SpatialInputs<'a> {
    pub depth: &'a DepthGrid,
    pub mask: &'a SegMask,
    pub intrinsics: &'a CameraIntrinsics,
    pub extrinsics: &'a RigidTransform,
    pub static_points: &'a [Point2],
}

/// What happened to one vehicle cluster this frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleObservation {
    pub cluster_size: usize,
    pub orientation: Orientation,
    pub rough: AlignedBox,
    pub refined: AlignedBox,
    pub score: usize,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialDiagnostics {
    /// No usable vehicle cluster: the previous state was carried forward.
    pub detection_gap: bool,
    /// The state was already fixed; nothing was computed.
    pub skipped_fixed: bool,
    pub cloud_size: usize,
    pub observations: Vec<VehicleObservation>,
}

/// Per-frame vehicle boxes from camera and static radar, without temporal
/// smoothing.
pub fn observe_vehicles(
    inputs: &SpatialInputs<'_>,
    cfg: &PipelineConfig,
) -> Result<(Vec<VehicleObservation>, usize)> {
    let cloud = vehicle_depth_cloud(
        inputs.depth,
        inputs.mask,
        inputs.intrinsics,
        inputs.extrinsics,
        &cfg.height_band(),
    )?;
    let clusters = dbscan(&cloud, cfg.vehicle_eps, cfg.vehicle_min_pts)?;
    let params = RefineParams::from_config(cfg);
    let mut out = Vec::new();
    for members in &clusters.clusters {
        let pts: Vec<Point2> = members.iter().map(|&i| cloud[i]).collect();
        let surfaces = match classify_surfaces(&pts) {
            Ok(s) => s,
            Err(e) => {
                warn!("skipping vehicle cluster of {} points: {e}", pts.len());
                continue;
            }
        };
        let (lo, hi) = extents(&pts).expect("non-empty cluster");
        let center = rough_center(
            lo,
            hi,
            surfaces.orientation,
            cfg.vehicle_width,
            cfg.vehicle_length,
        );
        let rough = AlignedBox::try_new(center, cfg.vehicle_width, cfg.vehicle_length)?;
        let r = refine_box(&rough, inputs.static_points, params)?;
        out.push(VehicleObservation {
            cluster_size: pts.len(),
            orientation: surfaces.orientation,
            rough,
            refined: r.refined,
            score: r.score,
            low_confidence: r.low_confidence,
        });
    }
    Ok((out, cloud.len()))
}

/// Full spatial update for one frame.
pub fn infer_spatial(
    inputs: &SpatialInputs<'_>,
    state: &SpatialState,
    pedestrian_detected: bool,
    cfg: &PipelineConfig,
) -> Result<(SpatialState, SpatialDiagnostics)> {
    if state.fixed {
        return Ok((
            state.clone(),
            SpatialDiagnostics {
                skipped_fixed: true,
                ..Default::default()
            },
        ));
    }
    let (observations, cloud_size) = observe_vehicles(inputs, cfg)?;
    if observations.is_empty() {
        debug!("detection gap: carrying spatial state forward");
        let mut next = state.clone();
        if pedestrian_detected {
            next.fixed = true;
        }
        return Ok((
            next,
            SpatialDiagnostics {
                detection_gap: true,
                skipped_fixed: false,
                cloud_size,
                observations,
            },
        ));
    }
    let boxes: Vec<AlignedBox> = observations.iter().map(|o| o.refined).collect();
    let next = smooth_and_fix(state, &boxes, pedestrian_detected, cfg);
    Ok((
        next,
        SpatialDiagnostics {
            detection_gap: false,
            skipped_fixed: false,
            cloud_size,
            observations,
        },
    ))
}
