//! Camera-assisted radar localization of pedestrians hidden between parked
//! vehicles.
//!
//! The pipeline estimates parked-vehicle boxes from a depth image and static
//! radar returns, then unfolds multipath dynamic returns off those boxes to
//! recover the true position of a pedestrian that is not in line of sight.

pub mod camera;
pub mod clustering;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod pipeline;
pub mod reflection;
pub mod rng;
pub mod sensor;
pub mod simulator;
pub mod spatial;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geometry::{AlignedBox, LineSeg, Point2, Point3, RigidTransform};
pub use pipeline::{FrameInput, FrameResult, Pipeline};
pub use simulator::Scenario;
