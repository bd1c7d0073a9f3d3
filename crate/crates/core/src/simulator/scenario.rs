use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AlignedBox, Point2, Point3, RigidTransform};
use crate::sensor::CameraIntrinsics;

pub const SCENARIO_VERSION: &str = "nlos-scenario/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Meters.
    pub radar_range_sigma: f64,
    /// Radians.
    pub radar_angle_sigma: f64,
    /// Relative depth error, applied as one scale factor per object per frame.
    pub depth_sigma_rel: f64,
    /// Poisson mean, points per frame.
    pub static_clutter_rate: f64,
    pub dynamic_clutter_rate: f64,
    pub dropout_prob: f64,
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The noise level used by the benchmark scenarios.
    pub fn benchmark() -> Self {
        NoiseSpec {
            radar_range_sigma: 0.05,
            radar_angle_sigma: 0.5_f64.to_radians(),
            depth_sigma_rel: 0.03,
            static_clutter_rate: 2.0,
            dynamic_clutter_rate: 2.0,
            dropout_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radar_range_sigma", self.radar_range_sigma),
            ("radar_angle_sigma", self.radar_angle_sigma),
            ("depth_sigma_rel", self.depth_sigma_rel),
            ("static_clutter_rate", self.static_clutter_rate),
            ("dynamic_clutter_rate", self.dynamic_clutter_rate),
            ("dropout_prob", self.dropout_prob),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!(
                    "noise.{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.dropout_prob > 1.0 {
            return Err(Error::Validation(
                "noise.dropout_prob must be at most 1".into(),
            ));
        }
        Ok(())
    }
}

/// Forward-model constants that are not noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    /// Distance between static samples along a visible edge.
    pub static_spacing: f64,
    /// Dynamic returns emitted per propagation path.
    pub returns_per_path: usize,
    pub pedestrian_radius: f64,
    pub pedestrian_height: f64,
    pub vehicle_height: f64,
    /// Clutter is drawn uniformly inside this rectangle.
    pub clutter_min: Point2,
    pub clutter_max: Point2,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            static_spacing: 0.25,
            returns_per_path: 4,
            pedestrian_radius: 0.25,
            pedestrian_height: 1.7,
            vehicle_height: 1.5,
            clutter_min: Point2::new(0.0, -4.0),
            clutter_max: Point2::new(15.0, 8.0),
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("static_spacing", self.static_spacing),
            ("pedestrian_radius", self.pedestrian_radius),
            ("pedestrian_height", self.pedestrian_height),
            ("vehicle_height", self.vehicle_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "sensor.{name} must be positive, got {v}"
                )));
            }
        }
        if self.returns_per_path == 0 {
            return Err(Error::Validation(
                "sensor.returns_per_path must be at least 1".into(),
            ));
        }
        if self.clutter_min.x >= self.clutter_max.x || self.clutter_min.y >= self.clutter_max.y {
            return Err(Error::Validation("sensor clutter region is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub name: String,
    pub center: Point2,
    pub width: f64,
    pub length: f64,
}

impl Vehicle {
    pub fn new(name: &str, footprint: AlignedBox) -> Self {
        Vehicle {
            name: name.to_string(),
            center: footprint.center,
            width: footprint.width,
            length: footprint.length,
        }
    }

    pub fn footprint(&self) -> Result<AlignedBox> {
        AlignedBox::try_new(self.center, self.width, self.length)
            .map_err(|e| Error::Validation(format!("vehicle `{}`: {e}", self.name)))
    }
}

/// A pedestrian walking a polyline at constant speed, present in the scene
/// from `start_time` until the last waypoint is reached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub name: String,
    pub waypoints: Vec<Point2>,
    /// Meters per second.
    pub speed: f64,
    /// Seconds.
    pub start_time: f64,
}

impl Trajectory {
    /// Time stamp at which each waypoint is reached.
    pub fn timed_waypoints(&self) -> Vec<(f64, Point2)> {
        let mut t = self.start_time;
        let mut out = Vec::with_capacity(self.waypoints.len());
        for (i, &w) in self.waypoints.iter().enumerate() {
            if i > 0 {
                t += self.waypoints[i - 1].distance(w) / self.speed;
            }
            out.push((t, w));
        }
        out
    }

    pub fn end_time(&self) -> f64 {
        self.timed_waypoints()
            .last()
            .map_or(self.start_time, |w| w.0)
    }

    pub fn position_at(&self, t: f64) -> Option<Point2> {
        let timed = self.timed_waypoints();
        let (t0, first) = *timed.first()?;
        if t < t0 || t > timed.last()?.0 {
            return None;
        }
        if timed.len() == 1 {
            return Some(first);
        }
        for w in timed.windows(2) {
            let ((ta, a), (tb, b)) = (w[0], w[1]);
            if t <= tb {
                let f = if tb > ta { (t - ta) / (tb - ta) } else { 1.0 };
                return Some(a.lerp(b, f));
            }
        }
        timed.last().map(|w| w.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraExtrinsics {
    /// Ego frame, meters; `z` is the mounting height.
    pub position: Point3,
    /// Heading of the optical axis, degrees counter-clockwise from ego `x`.
    pub yaw_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
}

impl CameraSpec {
    pub fn transform(&self) -> RigidTransform {
        RigidTransform::camera_mount(
            self.extrinsics.position,
            self.extrinsics.yaw_deg.to_radians(),
        )
    }

    pub fn ground_position(&self) -> Point2 {
        self.extrinsics.position.ground()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: String,
    pub id: String,
    pub ego_origin: Point2,
    pub vehicles: Vec<Vehicle>,
    pub pedestrians: Vec<Trajectory>,
    pub camera: CameraSpec,
    /// Hz.
    pub frame_rate: f64,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub sensor: SensorModel,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::VersionMismatch {
                path: self.id.clone().into(),
                expected: SCENARIO_VERSION.into(),
                found: self.version.clone(),
            });
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Validation(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::Validation(format!(
                "frame_rate must be positive, got {}",
                self.frame_rate
            )));
        }
        self.noise.validate()?;
        self.sensor.validate()?;
        let boxes = self.vehicle_boxes()?;
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    return Err(Error::Validation(format!(
                        "vehicles `{}` and `{}` overlap",
                        self.vehicles[i].name, self.vehicles[j].name
                    )));
                }
            }
            if boxes[i].contains(self.ego_origin) {
                return Err(Error::Validation(format!(
                    "ego origin lies inside vehicle `{}`",
                    self.vehicles[i].name
                )));
            }
        }
        for p in &self.pedestrians {
            if p.waypoints.is_empty() {
                return Err(Error::Validation(format!(
                    "pedestrian `{}` has no waypoints",
                    p.name
                )));
            }
            if !(p.speed.is_finite() && p.speed > 0.0) {
                return Err(Error::Validation(format!(
                    "pedestrian `{}` speed must be positive",
                    p.name
                )));
            }
            if !(p.start_time.is_finite() && p.start_time >= 0.0) {
                return Err(Error::Validation(format!(
                    "pedestrian `{}` start_time must be non-negative",
                    p.name
                )));
            }
            for (b, v) in boxes.iter().zip(&self.vehicles) {
                for (k, &w) in p.waypoints.iter().enumerate() {
                    if b.contains(w) {
                        return Err(Error::Validation(format!(
                            "pedestrian `{}` waypoint {k} {w} lies inside vehicle `{}`",
                            p.name, v.name
                        )));
                    }
                }
                for (k, w) in p.waypoints.windows(2).enumerate() {
                    if b.segment_crosses_interior(w[0], w[1], 0.0) {
                        return Err(Error::Validation(format!(
                            "pedestrian `{}` path leg {k} passes through vehicle `{}`",
                            p.name, v.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vehicle_boxes(&self) -> Result<Vec<AlignedBox>> {
        self.vehicles.iter().map(Vehicle::footprint).collect()
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.frame_rate + 1e-9).floor() as usize + 1
    }

    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.frame_rate
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.frame_count())
            .map(|k| self.frame_time(k))
            .collect()
    }
}
