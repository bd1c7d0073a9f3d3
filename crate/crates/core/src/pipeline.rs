//! Per-frame driver: spatial inference followed by target localization.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::geometry::{AlignedBox, Point2, RigidTransform};
use crate::localization::{localize, RejectedCluster, TargetEstimate};
use crate::sensor::{CameraIntrinsics, DepthGrid, RadarFrame, SegMask};
use crate::spatial::{infer_spatial, SpatialDiagnostics, SpatialInputs, SpatialState};

/// Sensor data of one frame.
#[derive(Clone, Copy, Debug)]
pub struct FrameInput<'a> {
    pub radar: &'a RadarFrame,
    pub depth: &'a DepthGrid,
    pub mask: &'a SegMask,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub spatial: SpatialDiagnostics,
    pub static_points: usize,
    pub dynamic_points: usize,
    pub reflected_points: usize,
    pub truncated: usize,
    pub rejected: Vec<RejectedCluster>,
}

/// Pipeline output for one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame: usize,
    pub timestamp: f64,
    /// Reflector map used for this frame.
    pub boxes: Vec<AlignedBox>,
    pub fixed: bool,
    pub estimates: Vec<TargetEstimate>,
    pub diagnostics: FrameDiagnostics,
}

/// Stateful runner over a frame sequence.
///
/// Spatial fixing is driven by whether the previous frame produced a
/// pedestrian estimate.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: RigidTransform,
    pub origin: Point2,
    state: SpatialState,
    detected: bool,
    frames: usize,
}

impl Pipeline {
    pub fn new(
        cfg: PipelineConfig,
        intrinsics: CameraIntrinsics,
        extrinsics: RigidTransform,
        origin: Point2,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Pipeline {
            cfg,
            intrinsics,
            extrinsics,
            origin,
            state: SpatialState::new(),
            detected: false,
            frames: 0,
        })
    }

    pub fn state(&self) -> &SpatialState {
        &self.state
    }

    pub fn step(&mut self, input: FrameInput<'_>) -> Result<FrameResult> {
        let static_points = input.radar.static_points();
        let dynamic_points = input.radar.dynamic_points();
        let spatial_inputs = SpatialInputs {
            depth: input.depth,
            mask: input.mask,
            intrinsics: &self.intrinsics,
            extrinsics: &self.extrinsics,
            static_points: &static_points,
        };
        let (state, spatial) =
            infer_spatial(&spatial_inputs, &self.state, self.detected, &self.cfg)?;
        self.state = state;
        let boxes = self.state.boxes();
        let loc = localize(&dynamic_points, &boxes, self.origin, &self.cfg)?;
        self.detected = !loc.estimates.is_empty();
        let frame = self.frames;
        self.frames += 1;
        Ok(FrameResult {
            frame,
            timestamp: input.radar.timestamp,
            boxes,
            fixed: self.state.fixed,
            estimates: loc.estimates,
            diagnostics: FrameDiagnostics {
                spatial,
                static_points: static_points.len(),
                dynamic_points: dynamic_points.len(),
                reflected_points: loc.traces.iter().filter(|t| t.reflected()).count(),
                truncated: loc.truncated,
                rejected: loc.rejected,
            },
        })
    }
}
