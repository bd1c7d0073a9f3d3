//! Built-in scenario templates: two parked vehicles on the left of the ego
//! lane with a pedestrian emerging through the gap between them.
//!
//! The vehicles are parked nose-in (x-extent 1.8 m, y-extent 4.5 m) and
//! staggered: the front vehicle VA sits closer to the lane than the rear
//! vehicle VB.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AlignedBox, Point2, Point3};
use crate::sensor::CameraIntrinsics;

use super::scenario::{
    CameraExtrinsics, CameraSpec, NoiseSpec, Scenario, SensorModel, Trajectory, Vehicle,
    SCENARIO_VERSION,
};

pub const BUILTIN_NAMES: [&str; 3] = ["SA", "SB", "SC"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Layout {
    /// Free space between VA and VB along x.
    pub gap: f64,
    /// x of the gap center.
    pub gap_center: f64,
    /// y of the lane-facing side of VA and VB.
    pub front_y_a: f64,
    pub front_y_b: f64,
    pub vehicle_width: f64,
    pub vehicle_length: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            gap: 1.2,
            gap_center: 6.6,
            front_y_a: 1.9,
            front_y_b: 2.8,
            vehicle_width: 1.8,
            vehicle_length: 4.5,
        }
    }
}

impl Layout {
    pub fn va(&self) -> AlignedBox {
        let x0 = self.gap_center + self.gap / 2.0;
        AlignedBox::new(
            Point2::new(
                x0 + self.vehicle_width / 2.0,
                self.front_y_a + self.vehicle_length / 2.0,
            ),
            self.vehicle_width,
            self.vehicle_length,
        )
    }

    pub fn vb(&self) -> AlignedBox {
        let x1 = self.gap_center - self.gap / 2.0;
        AlignedBox::new(
            Point2::new(
                x1 - self.vehicle_width / 2.0,
                self.front_y_b + self.vehicle_length / 2.0,
            ),
            self.vehicle_width,
            self.vehicle_length,
        )
    }

    /// x of a pedestrian walking out through the gap.
    pub fn lane_x(&self) -> f64 {
        self.gap_center + self.gap * 0.05 / 1.2
    }

    /// y where walkers start, deep inside the gap.
    pub fn gap_depth_y(&self) -> f64 {
        self.front_y_a.max(self.front_y_b) + 0.7 * self.vehicle_length
    }
}

pub fn default_camera() -> CameraSpec {
    CameraSpec {
        intrinsics: CameraIntrinsics::from_hfov(400, 150, 100_f64.to_radians())
            .expect("valid default intrinsics"),
        extrinsics: CameraExtrinsics {
            position: Point3::new(-1.5, -0.8, 1.3),
            yaw_deg: 15.0,
        },
    }
}

fn walker(name: &str, x: f64, from_y: f64, to_y: f64, speed: f64, start: f64) -> Trajectory {
    Trajectory {
        name: name.to_string(),
        waypoints: vec![Point2::new(x, from_y), Point2::new(x, to_y)],
        speed,
        start_time: start,
    }
}

fn base(id: &str, layout: &Layout, duration: f64, pedestrians: Vec<Trajectory>) -> Scenario {
    Scenario {
        version: SCENARIO_VERSION.to_string(),
        id: id.to_string(),
        ego_origin: Point2::ORIGIN,
        vehicles: vec![
            Vehicle::new("VA", layout.va()),
            Vehicle::new("VB", layout.vb()),
        ],
        pedestrians,
        camera: default_camera(),
        frame_rate: 10.0,
        duration,
        noise: NoiseSpec::zero(),
        sensor: SensorModel::default(),
        seed: 0,
    }
}

/// Single pedestrian darting out from between VA and VB.
pub fn scenario_sa(layout: &Layout) -> Scenario {
    let x = layout.lane_x();
    let deep = layout.gap_depth_y();
    base(
        "SA",
        layout,
        7.0,
        vec![walker("Ped1", x, deep, -0.5, 1.2, 1.0)],
    )
}

/// Two pedestrians emerging one after the other.
pub fn scenario_sb(layout: &Layout) -> Scenario {
    let x = layout.lane_x();
    let deep = layout.gap_depth_y();
    base(
        "SB",
        layout,
        10.5,
        vec![
            walker("Ped1", x, deep, -2.0, 1.6, 0.5),
            walker("Ped2", x - 0.05, deep, -0.5, 1.1, 4.0),
        ],
    )
}

/// One pedestrian emerging from the gap while another approaches the ego
/// vehicle in the open.
pub fn scenario_sc(layout: &Layout) -> Scenario {
    let x = layout.lane_x();
    let deep = layout.gap_depth_y();
    let approach = Trajectory {
        name: "Ped1".to_string(),
        waypoints: vec![Point2::new(16.0, -1.2), Point2::new(2.0, -1.2)],
        speed: 1.3,
        start_time: 0.0,
    };
    base(
        "SC",
        layout,
        7.0,
        vec![approach, walker("Ped2", x, deep, -0.5, 1.2, 1.0)],
    )
}

pub fn builtin(name: &str, layout: &Layout) -> Result<Scenario> {
    match name.to_ascii_uppercase().as_str() {
        "SA" => Ok(scenario_sa(layout)),
        "SB" => Ok(scenario_sb(layout)),
        "SC" => Ok(scenario_sc(layout)),
        _ => Err(Error::Config(format!(
            "unknown built-in scenario `{name}` (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_scenarios(layout: &Layout) -> Vec<Scenario> {
    vec![
        scenario_sa(layout),
        scenario_sb(layout),
        scenario_sc(layout),
    ]
}
