//! Pedestrian position estimates from unfolded dynamic radar returns.

use serde::{Deserialize, Serialize};

use crate::clustering::{centroid, dbscan};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::geometry::{AlignedBox, Point2};
use crate::reflection::{unfold, ReflectionTrace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub position: Point2,
    pub support: usize,
    pub direct_count: usize,
    pub reflected_count: usize,
    pub cluster_id: usize,
}

/// Why a target cluster was discarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NearStructure,
    DirectOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedCluster {
    pub position: Point2,
    pub support: usize,
    pub reason: Rejection,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Localization {
    /// Ordered by support, largest first.
    pub estimates: Vec<TargetEstimate>,
    pub traces: Vec<ReflectionTrace>,
    pub truncated: usize,
    pub rejected: Vec<RejectedCluster>,
}

/// Unfolds, clusters and filters the dynamic returns of one frame.
///
/// Truncated traces are dropped. A cluster is rejected when its centroid lies
/// inside any vehicle box inflated by `structure_margin`, or when none of its
/// returns was reflected.
pub fn localize(
    dynamic_points: &[Point2],
    structures: &[AlignedBox],
    origin: Point2,
    cfg: &PipelineConfig,
) -> Result<Localization> {
    let mut traces = Vec::with_capacity(dynamic_points.len());
    for &p in dynamic_points {
        traces.push(unfold(
            p,
            origin,
            structures,
            cfg.max_bounces,
            cfg.hit_epsilon,
        )?);
    }
    let kept: Vec<&ReflectionTrace> = traces.iter().filter(|t| !t.truncated).collect();
    let truncated = traces.len() - kept.len();
    let corrected: Vec<Point2> = kept.iter().map(|t| t.corrected).collect();
    let clusters = dbscan(&corrected, cfg.target_eps, cfg.target_min_pts)?;

    let inflated: Vec<AlignedBox> = structures
        .iter()
        .map(|b| b.inflated(cfg.structure_margin))
        .collect();
    let mut estimates = Vec::new();
    let mut rejected = Vec::new();
    for (cluster_id, members) in clusters.clusters.iter().enumerate() {
        let pts: Vec<Point2> = members.iter().map(|&i| corrected[i]).collect();
        let position = centroid(&pts)?;
        let reflected_count = members.iter().filter(|&&i| kept[i].reflected()).count();
        let support = members.len();
        let reason = if inflated.iter().any(|b| b.contains(position)) {
            Some(Rejection::NearStructure)
        } else if reflected_count == 0 {
            Some(Rejection::DirectOnly)
        } else {
            None
        };
        match reason {
            Some(reason) => rejected.push(RejectedCluster {
                position,
                support,
                reason,
            }),
            None => estimates.push(TargetEstimate {
                position,
                support,
                direct_count: support - reflected_count,
                reflected_count,
                cluster_id,
            }),
        }
    }
    estimates.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    Ok(Localization {
        estimates,
        traces,
        truncated,
        rejected,
    })
}

/// Square evaluation box of side `size` centered on the estimate.
pub fn pedestrian_box(estimate: &TargetEstimate, size: f64) -> AlignedBox {
    AlignedBox::new(estimate.position, size, size)
}
