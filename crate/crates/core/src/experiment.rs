//! End-to-end helpers: simulate a scenario, run the pipeline, score it.

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::evaluation::{evaluate_run, ScenarioReport};
use crate::geometry::{Point2, RigidTransform};
use crate::pipeline::{FrameInput, FrameResult, Pipeline};
use crate::sensor::{CameraIntrinsics, DepthGrid, RadarFrame, SegMask};
use crate::simulator::{dense_reference, simulate, GroundTruth, Scenario, SimFrame};

/// Runs the pipeline over a frame sequence.
pub fn run_pipeline<'a, I>(
    frames: I,
    intrinsics: CameraIntrinsics,
    extrinsics: RigidTransform,
    origin: Point2,
    cfg: &PipelineConfig,
) -> Result<Vec<FrameResult>>
where
    I: IntoIterator<Item = (&'a RadarFrame, &'a DepthGrid, &'a SegMask)>,
{
    let mut p = Pipeline::new(cfg.clone(), intrinsics, extrinsics, origin)?;
    frames
        .into_iter()
        .map(|(radar, depth, mask)| p.step(FrameInput { radar, depth, mask }))
        .collect()
}

pub fn run_sim_frames(
    scenario: &Scenario,
    frames: &[SimFrame],
    cfg: &PipelineConfig,
) -> Result<Vec<FrameResult>> {
    run_pipeline(
        frames.iter().map(|f| (&f.radar, &f.depth, &f.mask)),
        scenario.camera.intrinsics,
        scenario.camera.transform(),
        scenario.ego_origin,
        cfg,
    )
}

/// Everything produced by one simulated run.
#[derive(Clone, Debug)]
pub struct Trial {
    pub truth: Vec<GroundTruth>,
    pub results: Vec<FrameResult>,
    pub reference: Option<Vec<FrameResult>>,
    pub report: ScenarioReport,
}

/// Simulates, runs and scores a scenario; with `reference` the dense static
/// variant is also run to fill the reference spatial error.
pub fn run_trial(scenario: &Scenario, cfg: &PipelineConfig, reference: bool) -> Result<Trial> {
    let frames = simulate(scenario)?;
    let results = run_sim_frames(scenario, &frames, cfg)?;
    let reference = if reference {
        let dense = dense_reference(scenario);
        let dense_frames = simulate(&dense)?;
        Some(run_sim_frames(&dense, &dense_frames, cfg)?)
    } else {
        None
    };
    let truth: Vec<GroundTruth> = frames.into_iter().map(|f| f.truth).collect();
    let report = evaluate_run(
        &scenario.id,
        scenario.seed,
        &results,
        &truth,
        reference.as_deref(),
        cfg.ped_box_size,
    )?;
    Ok(Trial {
        truth,
        results,
        reference,
        report,
    })
}
