//! Forward model: radar returns, depth image and vehicle mask for a scripted
//! scene, with per-point ground-truth labels.

mod builtin;
mod scenario;

pub use builtin::{
    builtin, builtin_scenarios, default_camera, scenario_sa, scenario_sb, scenario_sc, Layout,
    BUILTIN_NAMES,
};
pub use scenario::{
    CameraExtrinsics, CameraSpec, NoiseSpec, Scenario, SensorModel, Trajectory, Vehicle,
    SCENARIO_VERSION,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_edges, AlignedBox, LineSeg, Point2};
use crate::reflection::{first_hit, mirror_point};
use crate::rng::{substream, Stream};
use crate::sensor::{DepthGrid, Motion, RadarFrame, RadarPoint, SegMask};

/// Visibility of a pedestrian from the camera.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Nlos,
    Partial,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Reflector,
    StaticClutter,
    TargetDirect,
    TargetReflected,
    DynamicClutter,
}

impl LabelKind {
    pub fn motion(self) -> Motion {
        match self {
            LabelKind::Reflector | LabelKind::StaticClutter => Motion::Static,
            _ => Motion::Dynamic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointLabel {
    pub id: u32,
    pub kind: LabelKind,
    /// Index into the scenario's pedestrians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pedestrian: Option<usize>,
    /// Index into the scenario's vehicles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianTruth {
    pub name: String,
    pub position: Point2,
    pub visibility: Visibility,
    /// Direct line of sight from the radar origin.
    pub radar_los: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame: usize,
    pub timestamp: f64,
    pub ego_origin: Point2,
    /// Pedestrians present in the scene at this time.
    pub pedestrians: Vec<PedestrianTruth>,
    pub vehicles: Vec<Vehicle>,
    pub labels: Vec<PointLabel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimFrame {
    pub radar: RadarFrame,
    pub depth: DepthGrid,
    pub mask: SegMask,
    pub truth: GroundTruth,
}

/// Independent random streams for one frame.
pub struct FrameStreams {
    pub static_returns: ChaCha8Rng,
    pub dynamic_returns: ChaCha8Rng,
    pub depth: ChaCha8Rng,
    pub clutter: ChaCha8Rng,
}

impl FrameStreams {
    pub fn for_frame(seed: u64, frame: usize) -> Self {
        let f = frame as u64;
        FrameStreams {
            static_returns: substream(seed, f, Stream::Static),
            dynamic_returns: substream(seed, f, Stream::Dynamic),
            depth: substream(seed, f, Stream::Depth),
            clutter: substream(seed, f, Stream::Clutter),
        }
    }
}

const OCCLUSION_EPS: f64 = 1e-9;
const VISIBILITY_SAMPLES: usize = 21;

struct Scene<'a> {
    scenario: &'a Scenario,
    boxes: Vec<AlignedBox>,
    /// (pedestrian index, position) of present pedestrians.
    peds: Vec<(usize, Point2)>,
}

impl Scene<'_> {
    fn boxes_block(&self, a: Point2, b: Point2) -> bool {
        self.boxes
            .iter()
            .any(|bx| bx.segment_crosses_interior(a, b, OCCLUSION_EPS))
    }

    fn peds_block(&self, a: Point2, b: Point2, except: Option<usize>) -> bool {
        let r = self.scenario.sensor.pedestrian_radius;
        self.peds
            .iter()
            .any(|&(i, c)| Some(i) != except && segment_point_distance(a, b, c) < r)
    }

    fn clear(&self, a: Point2, b: Point2, except: Option<usize>) -> bool {
        !self.boxes_block(a, b) && !self.peds_block(a, b, except)
    }
}

fn segment_point_distance(a: Point2, b: Point2, c: Point2) -> f64 {
    if a.distance(b) <= 1e-12 {
        return a.distance(c);
    }
    LineSeg::new(a, b).distance_to(c)
}

fn outward_normal(edge_index: usize) -> Point2 {
    match edge_index {
        0 => Point2::new(0.0, -1.0),
        1 => Point2::new(1.0, 0.0),
        2 => Point2::new(0.0, 1.0),
        _ => Point2::new(-1.0, 0.0),
    }
}

fn faces(edge: &LineSeg, edge_index: usize, viewer: Point2) -> bool {
    let mid = edge.a.lerp(edge.b, 0.5);
    outward_normal(edge_index).dot(viewer - mid) > 0.0
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// Perturbs a return in range and bearing about the radar origin.
fn jitter(p: Point2, origin: Point2, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Point2 {
    if noise.radar_range_sigma == 0.0 && noise.radar_angle_sigma == 0.0 {
        return p;
    }
    let d = p - origin;
    let r = d.norm() + normal(rng, noise.radar_range_sigma);
    let a = d.y.atan2(d.x) + normal(rng, noise.radar_angle_sigma);
    origin + Point2::new(r * a.cos(), r * a.sin())
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng) as usize
    } else {
        0
    }
}

fn dropped(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

struct Emitter {
    points: Vec<RadarPoint>,
    labels: Vec<PointLabel>,
}

impl Emitter {
    fn push(
        &mut self,
        position: Point2,
        kind: LabelKind,
        pedestrian: Option<usize>,
        vehicle: Option<usize>,
    ) {
        let id = self.points.len() as u32;
        self.points.push(RadarPoint {
            id,
            position,
            motion: kind.motion(),
        });
        self.labels.push(PointLabel {
            id,
            kind,
            pedestrian,
            vehicle,
        });
    }
}

/// Evenly spaced samples along an edge, at cell midpoints.
fn edge_samples(edge: &LineSeg, spacing: f64) -> Vec<Point2> {
    let n = (edge.length() / spacing).ceil().max(1.0) as usize;
    (0..n)
        .map(|k| edge.a.lerp(edge.b, (k as f64 + 0.5) / n as f64))
        .collect()
}

fn radar_returns(scene: &Scene, streams: &mut FrameStreams) -> (Vec<RadarPoint>, Vec<PointLabel>) {
    let sc = scene.scenario;
    let o = sc.ego_origin;
    let noise = &sc.noise;
    let mut out = Emitter {
        points: Vec::new(),
        labels: Vec::new(),
    };

    let rng = &mut streams.static_returns;
    for (vi, b) in scene.boxes.iter().enumerate() {
        for (ei, edge) in box_edges(b).iter().enumerate() {
            if !faces(edge, ei, o) {
                continue;
            }
            for p in edge_samples(edge, sc.sensor.static_spacing) {
                if !scene.clear(o, p, None) {
                    continue;
                }
                let q = jitter(p, o, noise, rng);
                if !dropped(rng, noise.dropout_prob) {
                    out.push(q, LabelKind::Reflector, None, Some(vi));
                }
            }
        }
    }

    let rng = &mut streams.dynamic_returns;
    let n = sc.sensor.returns_per_path;
    for &(pi, ped) in &scene.peds {
        if scene.clear(o, ped, Some(pi)) {
            for _ in 0..n {
                let q = jitter(ped, o, noise, rng);
                if !dropped(rng, noise.dropout_prob) {
                    out.push(q, LabelKind::TargetDirect, Some(pi), None);
                }
            }
        }
        for (vi, b) in scene.boxes.iter().enumerate() {
            for (ei, edge) in box_edges(b).iter().enumerate() {
                if !faces(edge, ei, o) {
                    continue;
                }
                let Some(image) = reflected_image(scene, pi, ped, vi, ei, edge) else {
                    continue;
                };
                for _ in 0..n {
                    let q = jitter(image, o, noise, rng);
                    if !dropped(rng, noise.dropout_prob) {
                        out.push(q, LabelKind::TargetReflected, Some(pi), Some(vi));
                    }
                }
            }
        }
    }

    let rng = &mut streams.clutter;
    let (lo, hi) = (sc.sensor.clutter_min, sc.sensor.clutter_max);
    for (rate, kind) in [
        (noise.static_clutter_rate, LabelKind::StaticClutter),
        (noise.dynamic_clutter_rate, LabelKind::DynamicClutter),
    ] {
        for _ in 0..poisson(rng, rate) {
            let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            if !dropped(rng, noise.dropout_prob) {
                out.push(p, kind, None, None);
            }
        }
    }
    (out.points, out.labels)
}

/// Apparent position of a single-bounce return off one edge, if that path
/// exists.
fn reflected_image(
    scene: &Scene,
    pi: usize,
    ped: Point2,
    vi: usize,
    ei: usize,
    edge: &LineSeg,
) -> Option<Point2> {
    let o = scene.scenario.ego_origin;
    let image = mirror_point(ped, edge).ok()?;
    let hit = first_hit(o, image, &scene.boxes, OCCLUSION_EPS)?;
    if hit.box_index != vi || hit.edge_index != ei {
        return None;
    }
    let q = hit.point;
    if scene.boxes_block(q, ped)
        || scene.peds_block(o, q, None)
        || scene.peds_block(q, ped, Some(pi))
    {
        return None;
    }
    Some(image)
}

/// Visibility of the pedestrian disc from the camera, sampled along the
/// diameter perpendicular to the line of sight.
fn camera_visibility(scene: &Scene, pi: usize, ped: Point2) -> Visibility {
    let c = scene.scenario.camera.ground_position();
    let r = scene.scenario.sensor.pedestrian_radius;
    let d = ped - c;
    let len = d.norm();
    if len <= r {
        return Visibility::Full;
    }
    let perp = Point2::new(-d.y / len, d.x / len);
    let visible = (0..VISIBILITY_SAMPLES)
        .filter(|&k| {
            let f = -1.0 + 2.0 * k as f64 / (VISIBILITY_SAMPLES - 1) as f64;
            let s = ped + perp * (f * r);
            scene.clear(c, s, Some(pi))
        })
        .count();
    match visible {
        0 => Visibility::Nlos,
        v if v == VISIBILITY_SAMPLES => Visibility::Full,
        _ => Visibility::Partial,
    }
}

fn ray_box(c: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let (mut t0, mut t1) = (0.0_f64, f64::INFINITY);
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if c[k] < lo[k] || c[k] > hi[k] {
                return None;
            }
        } else {
            let mut a = (lo[k] - c[k]) / d[k];
            let mut b = (hi[k] - c[k]) / d[k];
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
    }
    (t0 > 0.0).then_some(t0)
}

fn ray_cylinder(c: [f64; 3], d: [f64; 3], center: Point2, radius: f64, height: f64) -> Option<f64> {
    let (ox, oy) = (c[0] - center.x, c[1] - center.y);
    let a = d[0] * d[0] + d[1] * d[1];
    if a < 1e-15 {
        return None;
    }
    let b = ox * d[0] + oy * d[1];
    let cc = ox * ox + oy * oy - radius * radius;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return None;
    }
    let s = (-b - disc.sqrt()) / a;
    let z = c[2] + s * d[2];
    (s > 0.0 && (0.0..=height).contains(&z)).then_some(s)
}

/// Ray-casts extruded vehicle boxes and pedestrian cylinders into a depth
/// image. Pedestrians occlude but are not part of the vehicle mask.
fn render_camera(scene: &Scene, streams: &mut FrameStreams) -> (DepthGrid, SegMask) {
    let sc = scene.scenario;
    let k = sc.camera.intrinsics;
    let tf = sc.camera.transform();
    let rot = tf.rotation();
    let origin = tf.source_origin();
    let c = [origin.x, origin.y, origin.z];
    let sigma = sc.noise.depth_sigma_rel;
    let box_scale: Vec<f64> = scene
        .boxes
        .iter()
        .map(|_| 1.0 + normal(&mut streams.depth, sigma))
        .collect();
    let ped_scale: Vec<f64> = scene
        .peds
        .iter()
        .map(|_| 1.0 + normal(&mut streams.depth, sigma))
        .collect();
    let boxes: Vec<([f64; 3], [f64; 3])> = scene
        .boxes
        .iter()
        .map(|b| {
            let (lo, hi) = (b.min(), b.max());
            ([lo.x, lo.y, 0.0], [hi.x, hi.y, sc.sensor.vehicle_height])
        })
        .collect();

    let mut depth = DepthGrid::filled(k.width, k.height, 0.0);
    let mut mask = SegMask::empty(k.width, k.height);
    for v in 0..k.height {
        for u in 0..k.width {
            let dc = [(u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0];
            // Optical z is 1, so the ray parameter equals the depth.
            let de = [
                rot[0][0] * dc[0] + rot[1][0] * dc[1] + rot[2][0] * dc[2],
                rot[0][1] * dc[0] + rot[1][1] * dc[1] + rot[2][1] * dc[2],
                rot[0][2] * dc[0] + rot[1][2] * dc[1] + rot[2][2] * dc[2],
            ];
            let mut best: Option<(f64, bool, f64)> = None;
            for (i, (lo, hi)) in boxes.iter().enumerate() {
                if let Some(s) = ray_box(c, de, *lo, *hi) {
                    if best.is_none_or(|b| s < b.0) {
                        best = Some((s, true, box_scale[i]));
                    }
                }
            }
            for (i, &(_, p)) in scene.peds.iter().enumerate() {
                let hit = ray_cylinder(
                    c,
                    de,
                    p,
                    sc.sensor.pedestrian_radius,
                    sc.sensor.pedestrian_height,
                );
                if let Some(s) = hit {
                    if best.is_none_or(|b| s < b.0) {
                        best = Some((s, false, ped_scale[i]));
                    }
                }
            }
            if let Some((s, vehicle, scale)) = best {
                depth.set(u, v, s * scale);
                if vehicle {
                    mask.set(u, v, true);
                }
            }
        }
    }
    (depth, mask)
}

/// Generates the sensor data and ground truth at time `t`.
pub fn generate_frame(scenario: &Scenario, t: f64, streams: &mut FrameStreams) -> Result<SimFrame> {
    if !(t >= 0.0 && t <= scenario.duration + 1e-9) {
        return Err(Error::Config(format!(
            "time {t} outside scenario duration {}",
            scenario.duration
        )));
    }
    let boxes = scenario.vehicle_boxes()?;
    let peds: Vec<(usize, Point2)> = scenario
        .pedestrians
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.position_at(t).map(|x| (i, x)))
        .collect();
    let scene = Scene {
        scenario,
        boxes,
        peds,
    };
    let (points, labels) = radar_returns(&scene, streams);
    let (depth, mask) = render_camera(&scene, streams);
    let pedestrians = scene
        .peds
        .iter()
        .map(|&(i, p)| PedestrianTruth {
            name: scenario.pedestrians[i].name.clone(),
            position: p,
            visibility: camera_visibility(&scene, i, p),
            radar_los: scene.clear(scenario.ego_origin, p, Some(i)),
        })
        .collect();
    Ok(SimFrame {
        radar: RadarFrame {
            timestamp: t,
            points,
        },
        depth,
        mask,
        truth: GroundTruth {
            frame: (t * scenario.frame_rate).round() as usize,
            timestamp: t,
            ego_origin: scenario.ego_origin,
            pedestrians,
            vehicles: scenario.vehicles.clone(),
            labels,
        },
    })
}

/// Frame `index` with its own seeded random streams.
pub fn simulate_frame(scenario: &Scenario, index: usize) -> Result<SimFrame> {
    let mut streams = FrameStreams::for_frame(scenario.seed, index);
    let mut f = generate_frame(scenario, scenario.frame_time(index), &mut streams)?;
    f.truth.frame = index;
    Ok(f)
}

pub fn simulate(scenario: &Scenario) -> Result<Vec<SimFrame>> {
    scenario.validate()?;
    (0..scenario.frame_count())
        .map(|k| simulate_frame(scenario, k))
        .collect()
}

/// Static density multiplier of the dense reference mode.
pub const DENSE_FACTOR: f64 = 4.0;

/// The same scene with static returns sampled `DENSE_FACTOR` times more
/// densely. Depth, dynamic returns and clutter are unchanged.
pub fn dense_reference(scenario: &Scenario) -> Scenario {
    let mut s = scenario.clone();
    s.sensor.static_spacing /= DENSE_FACTOR;
    s
}
