//! Pipeline parameters. Every tunable lives here so a run can be reproduced
//! from its config snapshot.

use serde::{Deserialize, Serialize};

use crate::camera::HeightBand;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Standard vehicle x-extent.
    pub vehicle_width: f64,
    /// Standard vehicle y-extent.
    pub vehicle_length: f64,
    pub vehicle_eps: f64,
    pub vehicle_min_pts: usize,
    pub height_band_min: f64,
    pub height_band_max: f64,
    pub refine_tau: f64,
    pub refine_delta: f64,
    pub refine_step: f64,
    pub smoothing_window: usize,
    pub match_gate: f64,
    /// Tracks unseen for more than this many consecutive frames are dropped.
    pub max_track_misses: usize,
    pub max_bounces: usize,
    pub hit_epsilon: f64,
    pub target_eps: f64,
    pub target_min_pts: usize,
    pub structure_margin: f64,
    pub ped_box_size: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vehicle_width: 1.8,
            vehicle_length: 4.5,
            vehicle_eps: 0.5,
            vehicle_min_pts: 8,
            height_band_min: 0.2,
            height_band_max: 2.2,
            refine_tau: 0.15,
            refine_delta: 0.5,
            refine_step: 0.05,
            smoothing_window: 5,
            match_gate: 1.5,
            max_track_misses: 10,
            max_bounces: 3,
            hit_epsilon: 1e-9,
            target_eps: 0.6,
            target_min_pts: 2,
            structure_margin: 0.3,
            ped_box_size: 1.7,
        }
    }
}

impl PipelineConfig {
    pub fn height_band(&self) -> HeightBand {
        HeightBand {
            min: self.height_band_min,
            max: self.height_band_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vehicle_width", self.vehicle_width),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_eps", self.vehicle_eps),
            ("refine_tau", self.refine_tau),
            ("refine_delta", self.refine_delta),
            ("refine_step", self.refine_step),
            ("match_gate", self.match_gate),
            ("hit_epsilon", self.hit_epsilon),
            ("target_eps", self.target_eps),
            ("ped_box_size", self.ped_box_size),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.structure_margin.is_finite() && self.structure_margin >= 0.0) {
            return Err(Error::Config(
                "structure_margin must be non-negative".into(),
            ));
        }
        if self.refine_step > self.refine_delta {
            return Err(Error::Config(
                "refine_step must not exceed refine_delta".into(),
            ));
        }
        if self.height_band_min > self.height_band_max {
            return Err(Error::Config("height band is empty".into()));
        }
        for (name, v) in [
            ("vehicle_min_pts", self.vehicle_min_pts),
            ("target_min_pts", self.target_min_pts),
            ("smoothing_window", self.smoothing_window),
            ("max_bounces", self.max_bounces),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Sets one key from its textual value, e.g. from a `--set key=value`
    /// flag. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut obj = serde_json::to_value(&*self).expect("config serializes");
        let map = obj.as_object_mut().expect("config is an object");
        let Some(slot) = map.get_mut(key) else {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        };
        let parsed: serde_json::Value = serde_json::from_str(value)
            .map_err(|_| Error::Config(format!("`{value}` is not a number for `{key}`")))?;
        *slot = parsed;
        let next: PipelineConfig = serde_json::from_value(obj)
            .map_err(|e| Error::Config(format!("bad value for `{key}`: {e}")))?;
        next.validate()?;
        *self = next;
        Ok(())
    }
}
