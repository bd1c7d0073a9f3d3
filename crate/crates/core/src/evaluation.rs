//! Localization and spatial-inference metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AlignedBox, Point2};
use crate::pipeline::FrameResult;
use crate::simulator::{GroundTruth, Vehicle, Visibility};

/// A prediction is correct when its error is at most this many meters.
pub const CORRECT_THRESHOLD: f64 = 0.2;
/// A detection succeeds when IoU strictly exceeds this value.
pub const IOU_THRESHOLD: f64 = 0.2;
/// Maximum estimate-to-truth distance for association, meters.
pub const ASSOCIATION_GATE: f64 = 2.0;

pub fn euclid_error(pred: Point2, gt: Point2) -> f64 {
    pred.distance(gt)
}

pub fn is_correct(error: f64) -> bool {
    error <= CORRECT_THRESHOLD
}

pub fn iou(a: &AlignedBox, b: &AlignedBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn detection_success(iou: f64) -> bool {
    iou > IOU_THRESHOLD
}

/// Greedy nearest-neighbour pairing of estimates to ground truth within
/// `gate`; returns `(estimate index, truth index)` pairs.
pub fn associate(estimates: &[Point2], truths: &[Point2], gate: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (ei, e) in estimates.iter().enumerate() {
        for (ti, t) in truths.iter().enumerate() {
            let d = e.distance(*t);
            if d <= gate {
                pairs.push((d, ei, ti));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimates.len()];
    let mut used_t = vec![false; truths.len()];
    let mut out = Vec::new();
    for (_, ei, ti) in pairs {
        if !used_e[ei] && !used_t[ti] {
            used_e[ei] = true;
            used_t[ti] = true;
            out.push((ei, ti));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub pedestrian: String,
    pub estimate: Point2,
    pub truth: Point2,
    pub iou: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEval {
    pub frame: usize,
    pub t: f64,
    pub matches: Vec<Match>,
    /// Camera visibility of every pedestrian present in the frame.
    pub visibility: BTreeMap<String, Visibility>,
}

impl FrameEval {
    pub fn match_for(&self, pedestrian: &str) -> Option<&Match> {
        self.matches.iter().find(|m| m.pedestrian == pedestrian)
    }

    pub fn detected(&self, pedestrian: &str) -> bool {
        self.match_for(pedestrian)
            .is_some_and(|m| detection_success(m.iou))
    }
}

pub fn evaluate_frame(result: &FrameResult, truth: &GroundTruth, ped_box_size: f64) -> FrameEval {
    let est: Vec<Point2> = result.estimates.iter().map(|e| e.position).collect();
    let gt: Vec<Point2> = truth.pedestrians.iter().map(|p| p.position).collect();
    let matches = associate(&est, &gt, ASSOCIATION_GATE)
        .into_iter()
        .map(|(ei, ti)| {
            let (e, t) = (est[ei], gt[ti]);
            Match {
                pedestrian: truth.pedestrians[ti].name.clone(),
                estimate: e,
                truth: t,
                iou: iou(
                    &AlignedBox::new(e, ped_box_size, ped_box_size),
                    &AlignedBox::new(t, ped_box_size, ped_box_size),
                ),
                error: euclid_error(e, t),
            }
        })
        .collect();
    FrameEval {
        frame: truth.frame,
        t: truth.timestamp,
        matches,
        visibility: truth
            .pedestrians
            .iter()
            .map(|p| (p.name.clone(), p.visibility))
            .collect(),
    }
}

/// First successful detection of a pedestrian while hidden from the camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialDetection {
    pub t: f64,
    pub x_gt: f64,
    pub idp: f64,
}

pub fn idp(evals: &[FrameEval], pedestrian: &str, origin: Point2) -> Option<InitialDetection> {
    evals
        .iter()
        .filter(|e| e.visibility.get(pedestrian) == Some(&Visibility::Nlos))
        .find_map(|e| {
            let m = e.match_for(pedestrian)?;
            detection_success(m.iou).then(|| InitialDetection {
                t: e.t,
                x_gt: m.truth.x,
                idp: (m.truth.x - origin.x).abs(),
            })
        })
}

/// First time at or after `from` when the pedestrian is fully visible.
pub fn t_full(evals: &[FrameEval], pedestrian: &str, from: f64) -> Option<f64> {
    evals
        .iter()
        .find(|e| e.t >= from && e.visibility.get(pedestrian) == Some(&Visibility::Full))
        .map(|e| e.t)
}

pub fn tta(t_idp: f64, t_full: f64) -> f64 {
    t_full - t_idp
}

/// One frame of an accuracy window: the IoU and error of the matched
/// estimate, or `None` when the pedestrian was not matched.
pub type WindowSample = Option<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub frames: usize,
    pub qualifying: usize,
    pub error_sum: f64,
}

impl WindowScore {
    pub fn accuracy(&self) -> Option<f64> {
        (self.frames > 0).then(|| self.qualifying as f64 / self.frames as f64)
    }

    pub fn ae(&self) -> Option<f64> {
        (self.qualifying > 0).then(|| self.error_sum / self.qualifying as f64)
    }

    pub fn merge(&self, other: &WindowScore) -> WindowScore {
        WindowScore {
            frames: self.frames + other.frames,
            qualifying: self.qualifying + other.qualifying,
            error_sum: self.error_sum + other.error_sum,
        }
    }
}

pub fn score_window(samples: &[WindowSample]) -> WindowScore {
    let mut s = WindowScore {
        frames: samples.len(),
        qualifying: 0,
        error_sum: 0.0,
    };
    for (iou, err) in samples.iter().flatten() {
        if detection_success(*iou) {
            s.qualifying += 1;
            s.error_sum += err;
        }
    }
    s
}

/// Accuracy and AE over the frames in `[t_idp, t_full]`. `None` when the
/// window holds no frames; AE is `None` when no frame qualifies.
pub fn accuracy_and_ae(
    evals: &[FrameEval],
    pedestrian: &str,
    t_idp: f64,
    t_full: f64,
) -> Result<Option<(f64, Option<f64>)>> {
    if t_idp > t_full {
        return Err(Error::Validation(format!(
            "window start {t_idp} after end {t_full}"
        )));
    }
    let s = score_window(&window_samples(evals, pedestrian, t_idp, t_full));
    Ok(s.accuracy().map(|a| (a, s.ae())))
}

fn window_samples(evals: &[FrameEval], pedestrian: &str, from: f64, to: f64) -> Vec<WindowSample> {
    evals
        .iter()
        .filter(|e| e.t >= from && e.t <= to && e.visibility.contains_key(pedestrian))
        .map(|e| e.match_for(pedestrian).map(|m| (m.iou, m.error)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianReport {
    pub name: String,
    pub detection: Option<InitialDetection>,
    pub t_full: Option<f64>,
    pub tta: Option<f64>,
    pub window: Option<WindowScore>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleReport {
    pub name: String,
    /// Mean center error over frames with a matching box.
    pub radar_error: Option<f64>,
    /// Same, from the dense reference run.
    pub reference_error: Option<f64>,
    pub frames: usize,
}

impl VehicleReport {
    pub fn diff(&self) -> Option<f64> {
        Some(self.radar_error? - self.reference_error?)
    }

    pub fn correct(&self) -> Option<bool> {
        self.radar_error.map(is_correct)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub pedestrians: Vec<PedestrianReport>,
    pub vehicles: Vec<VehicleReport>,
    pub window: WindowScore,
}

impl ScenarioReport {
    pub fn accuracy(&self) -> Option<f64> {
        self.window.accuracy()
    }

    pub fn ae(&self) -> Option<f64> {
        self.window.ae()
    }

    /// Mean IDP over detected pedestrians.
    pub fn idp(&self) -> Option<f64> {
        mean(
            self.pedestrians
                .iter()
                .filter_map(|p| p.detection.map(|d| d.idp)),
        )
    }

    pub fn tta(&self) -> Option<f64> {
        mean(self.pedestrians.iter().filter_map(|p| p.tta))
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut n, mut s) = (0usize, 0.0);
    for v in values {
        n += 1;
        s += v;
    }
    (n > 0).then(|| s / n as f64)
}

/// Center error of the nearest estimated box for each ground-truth vehicle.
pub fn spatial_report(boxes: &[AlignedBox], vehicles: &[Vehicle]) -> Vec<(String, Option<f64>)> {
    vehicles
        .iter()
        .map(|v| {
            let err = boxes
                .iter()
                .map(|b| b.center.distance(v.center))
                .min_by(|a, b| a.total_cmp(b));
            (v.name.clone(), err)
        })
        .collect()
}

fn mean_spatial_errors(results: &[FrameResult], vehicles: &[Vehicle]) -> Vec<(Option<f64>, usize)> {
    let mut acc = vec![(0.0, 0usize); vehicles.len()];
    for r in results {
        for (i, (_, e)) in spatial_report(&r.boxes, vehicles).into_iter().enumerate() {
            if let Some(e) = e {
                acc[i].0 += e;
                acc[i].1 += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(s, n)| ((n > 0).then(|| s / n as f64), n))
        .collect()
}

/// Scores a run against its ground truth. `reference` is an optional dense
/// reference run of the same scene.
pub fn evaluate_run(
    scenario: &str,
    seed: u64,
    results: &[FrameResult],
    truth: &[GroundTruth],
    reference: Option<&[FrameResult]>,
    ped_box_size: f64,
) -> Result<ScenarioReport> {
    if results.len() != truth.len() {
        return Err(Error::Validation(format!(
            "run has {} frames but ground truth has {}",
            results.len(),
            truth.len()
        )));
    }
    for (r, g) in results.iter().zip(truth) {
        if (r.timestamp - g.timestamp).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "frame {} timestamp {} does not match ground truth {}",
                r.frame, r.timestamp, g.timestamp
            )));
        }
    }
    let evals: Vec<FrameEval> = results
        .iter()
        .zip(truth)
        .map(|(r, g)| evaluate_frame(r, g, ped_box_size))
        .collect();
    let origin = truth.first().map_or(Point2::ORIGIN, |g| g.ego_origin);

    let mut names: Vec<String> = Vec::new();
    for g in truth {
        for p in &g.pedestrians {
            if !names.contains(&p.name) {
                names.push(p.name.clone());
            }
        }
    }
    let mut pedestrians = Vec::new();
    let mut window = WindowScore {
        frames: 0,
        qualifying: 0,
        error_sum: 0.0,
    };
    for name in names {
        let detection = idp(&evals, &name, origin);
        let full = detection.and_then(|d| t_full(&evals, &name, d.t));
        let w = detection.map(|d| {
            let end = full.unwrap_or(f64::INFINITY);
            score_window(&window_samples(&evals, &name, d.t, end))
        });
        if let Some(w) = &w {
            window = window.merge(w);
        }
        pedestrians.push(PedestrianReport {
            name,
            detection,
            t_full: full,
            tta: detection.zip(full).map(|(d, f)| tta(d.t, f)),
            window: w,
        });
    }

    let vehicles_gt = truth
        .first()
        .map(|g| g.vehicles.clone())
        .unwrap_or_default();
    let radar = mean_spatial_errors(results, &vehicles_gt);
    let refs = reference.map(|r| mean_spatial_errors(r, &vehicles_gt));
    let vehicles = vehicles_gt
        .iter()
        .enumerate()
        .map(|(i, v)| VehicleReport {
            name: v.name.clone(),
            radar_error: radar[i].0,
            reference_error: refs.as_ref().and_then(|r| r[i].0),
            frames: radar[i].1,
        })
        .collect();
    Ok(ScenarioReport {
        scenario: scenario.to_string(),
        seed,
        pedestrians,
        vehicles,
        window,
    })
}

/// Seed-averaged summary of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub runs: usize,
    pub tta: Option<f64>,
    pub idp: Option<f64>,
    pub accuracy: Option<f64>,
    pub ae: Option<f64>,
    pub vehicles: Vec<VehicleReport>,
}

/// Averages per-seed metrics (mean over runs where each metric is defined).
pub fn summarize(reports: &[ScenarioReport]) -> Option<Summary> {
    let first = reports.first()?;
    let vehicles = first
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| VehicleReport {
            name: v.name.clone(),
            radar_error: mean(
                reports
                    .iter()
                    .filter_map(|r| r.vehicles.get(i)?.radar_error),
            ),
            reference_error: mean(
                reports
                    .iter()
                    .filter_map(|r| r.vehicles.get(i)?.reference_error),
            ),
            frames: reports
                .iter()
                .filter_map(|r| r.vehicles.get(i))
                .map(|v| v.frames)
                .sum(),
        })
        .collect();
    Some(Summary {
        scenario: first.scenario.clone(),
        runs: reports.len(),
        tta: mean(reports.iter().filter_map(ScenarioReport::tta)),
        idp: mean(reports.iter().filter_map(ScenarioReport::idp)),
        accuracy: mean(reports.iter().filter_map(ScenarioReport::accuracy)),
        ae: mean(reports.iter().filter_map(ScenarioReport::ae)),
        vehicles,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

pub const TABLE2_HEADER: &str = "scenario,tta_s,idp_m,accuracy,ae_m";
pub const TABLE1_HEADER: &str = "scenario,vehicle,radar_error_m,reference_error_m,diff_m";

/// Localization table: one row per scenario.
pub fn table2_csv(rows: &[Summary]) -> String {
    let mut out = String::from(TABLE2_HEADER);
    out.push('\n');
    for s in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.scenario,
            cell(s.tta),
            cell(s.idp),
            cell(s.accuracy),
            cell(s.ae)
        ));
    }
    out
}

/// Spatial-inference table: one row per scenario and vehicle.
pub fn table1_csv(rows: &[Summary]) -> String {
    let mut out = String::from(TABLE1_HEADER);
    out.push('\n');
    for s in rows {
        for v in &s.vehicles {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.scenario,
                v.name,
                cell(v.radar_error),
                cell(v.reference_error),
                cell(v.diff())
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64) -> AlignedBox {
        AlignedBox::new(Point2::new(x, y), 1.7, 1.7)
    }

    #[test]
    fn error_cases() {
        assert_eq!(
            euclid_error(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)),
            0.0
        );
        assert_eq!(euclid_error(Point2::ORIGIN, Point2::new(3.0, 4.0)), 5.0);
        assert!(!is_correct(5.0));
        assert!(is_correct(0.2));
        assert!(!is_correct(0.2 + 1e-12));
    }

    #[test]
    fn iou_cases() {
        assert_eq!(iou(&sq(0.0, 0.0), &sq(0.0, 0.0)), 1.0);
        assert_eq!(iou(&sq(0.0, 0.0), &sq(5.0, 0.0)), 0.0);
        assert!((iou(&sq(0.0, 0.0), &sq(0.85, 0.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert!(!detection_success(0.2));
    }

    #[test]
    fn association_is_greedy_and_gated() {
        let est = [
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(9.0, 0.0),
        ];
        let gt = [Point2::new(0.4, 0.0), Point2::new(-0.5, 0.0)];
        assert_eq!(associate(&est, &gt, 2.0), vec![(1, 0), (0, 1)]);
    }

    #[test]
    fn window_scoring() {
        let s = score_window(&[
            Some((0.5, 0.1)),
            Some((0.5, 0.2)),
            Some((0.5, 0.3)),
            Some((0.1, 1.5)),
        ]);
        assert_eq!(s.accuracy(), Some(0.75));
        assert!((s.ae().unwrap() - 0.2).abs() < 1e-12);
        let none = score_window(&[None, None]);
        assert_eq!(none.accuracy(), Some(0.0));
        assert_eq!(none.ae(), None);
        assert_eq!(score_window(&[]).accuracy(), None);
    }

    #[test]
    fn tta_is_difference() {
        assert!((tta(8.1, 10.0) - 1.9).abs() < 1e-12);
        assert_eq!(tta(3.0, 3.0), 0.0);
    }
}
