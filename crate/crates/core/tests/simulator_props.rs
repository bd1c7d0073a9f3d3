use nlos_core::camera::{unproject, vehicle_pixels};
use nlos_core::config::PipelineConfig;
use nlos_core::experiment::run_trial;
use nlos_core::geometry::{box_edges, camera_to_ego};
use nlos_core::localization::localize;
use nlos_core::reflection::unfold;
use nlos_core::sensor::Motion;
use nlos_core::simulator::{
    builtin, builtin_scenarios, dense_reference, generate_frame, simulate, simulate_frame,
    FrameStreams, LabelKind, Layout, NoiseSpec, Scenario, Trajectory, Visibility,
};
use nlos_core::Point2;

fn sa() -> Scenario {
    builtin("SA", &Layout::default()).unwrap()
}

fn noisy(mut s: Scenario, seed: u64) -> Scenario {
    s.noise = NoiseSpec::benchmark();
    s.seed = seed;
    s
}

#[test]
fn builtin_structure() {
    let all = builtin_scenarios(&Layout::default());
    let ids: Vec<&str> = all.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, ["SA", "SB", "SC"]);
    for s in &all {
        s.validate().unwrap();
        assert_eq!(s.vehicles.len(), 2);
        assert_eq!(s.vehicles[0].name, "VA");
        assert_eq!(s.vehicles[1].name, "VB");
    }
    assert_eq!(all[0].pedestrians.len(), 1);
    assert_eq!(all[1].pedestrians.len(), 2);
    assert_eq!(all[2].pedestrians.len(), 2);

    // SB: sequential emergence from the gap.
    let sb = &all[1];
    assert!(sb.pedestrians[1].start_time > sb.pedestrians[0].start_time);

    // SC: one pedestrian starts in radar line of sight, the other hidden.
    let f = simulate_frame(&all[2], 12).unwrap();
    let los: Vec<bool> = f.truth.pedestrians.iter().map(|p| p.radar_los).collect();
    assert!(los.contains(&true) && los.contains(&false), "{los:?}");
}

#[test]
fn simulation_is_deterministic() {
    let s = noisy(sa(), 5);
    assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
    let other = simulate(&noisy(sa(), 6)).unwrap();
    assert_ne!(simulate(&s).unwrap()[10].radar, other[10].radar);
}

#[test]
fn empty_scene_returns_only_edge_samples() {
    let mut s = sa();
    s.pedestrians.clear();
    let boxes = s.vehicle_boxes().unwrap();
    for k in [0, 7, 30] {
        let f = simulate_frame(&s, k).unwrap();
        assert!(!f.radar.points.is_empty());
        for p in &f.radar.points {
            assert_eq!(p.motion, Motion::Static);
            let d = boxes
                .iter()
                .flat_map(box_edges)
                .map(|e| e.distance_to(p.position))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-9, "static return {d} m off every edge");
        }
    }
}

#[test]
fn total_dropout_empties_frames() {
    let mut s = noisy(sa(), 1);
    s.noise.dropout_prob = 1.0;
    for f in simulate(&s).unwrap() {
        assert!(f.radar.points.is_empty());
        assert!(f.truth.labels.is_empty());
    }
}

#[test]
fn labels_partition_every_frame() {
    for s in builtin_scenarios(&Layout::default()) {
        for f in simulate(&noisy(s, 2)).unwrap() {
            assert_eq!(f.truth.labels.len(), f.radar.points.len());
            for (p, l) in f.radar.points.iter().zip(&f.truth.labels) {
                assert_eq!(p.id, l.id);
                assert_eq!(p.motion, l.kind.motion());
                let is_static = matches!(l.kind, LabelKind::Reflector | LabelKind::StaticClutter);
                assert_eq!(is_static, p.motion == Motion::Static);
                let targeted =
                    matches!(l.kind, LabelKind::TargetDirect | LabelKind::TargetReflected);
                assert_eq!(targeted, l.pedestrian.is_some());
            }
        }
    }
}

#[test]
fn single_bounce_returns_unfold_to_truth() {
    for s in builtin_scenarios(&Layout::default()) {
        let boxes = s.vehicle_boxes().unwrap();
        let o = s.ego_origin;
        let mut checked = 0;
        for f in simulate(&s).unwrap() {
            for (p, l) in f.radar.points.iter().zip(&f.truth.labels) {
                let Some(pi) = l.pedestrian else { continue };
                let truth = s.pedestrians[pi].position_at(f.truth.timestamp).unwrap();
                let trace = unfold(p.position, o, &boxes, 3, 1e-9).unwrap();
                match l.kind {
                    LabelKind::TargetReflected => {
                        assert_eq!(trace.bounces.len(), 1);
                        assert!(trace.corrected.distance(truth) <= 1e-9);
                        let q = trace.bounces[0].collision;
                        let path = o.distance(q) + q.distance(truth);
                        assert!((path - o.distance(p.position)).abs() <= 1e-9);
                        checked += 1;
                    }
                    LabelKind::TargetDirect => {
                        assert!(!trace.reflected());
                        assert!(trace.corrected.distance(truth) <= 1e-9);
                    }
                    _ => {}
                }
            }
        }
        assert!(checked > 0, "{} produced no reflected returns", s.id);
    }
}

#[test]
fn direct_returns_only_with_clear_path() {
    for s in builtin_scenarios(&Layout::default()) {
        let s = noisy(s, 4);
        let boxes = s.vehicle_boxes().unwrap();
        for f in simulate(&s).unwrap() {
            for l in f
                .truth
                .labels
                .iter()
                .filter(|l| l.kind == LabelKind::TargetDirect)
            {
                let ped = s.pedestrians[l.pedestrian.unwrap()]
                    .position_at(f.truth.timestamp)
                    .unwrap();
                assert!(boxes
                    .iter()
                    .all(|b| !b.segment_crosses_interior(s.ego_origin, ped, 1e-9)));
            }
        }
    }
}

#[test]
fn visibility_rises_monotonically() {
    let s = sa();
    let mut last = Visibility::Nlos;
    let mut seen = Vec::new();
    for f in simulate(&s).unwrap() {
        if let Some(p) = f.truth.pedestrians.first() {
            assert!(
                p.visibility >= last,
                "visibility dropped at t = {}",
                f.truth.timestamp
            );
            last = p.visibility;
            if seen.last() != Some(&last) {
                seen.push(last);
            }
        }
    }
    assert_eq!(
        seen,
        [Visibility::Nlos, Visibility::Partial, Visibility::Full]
    );
}

#[test]
fn pedestrians_present_only_while_walking() {
    let s = sa();
    let ped = &s.pedestrians[0];
    for f in simulate(&s).unwrap() {
        let t = f.truth.timestamp;
        let inside = t >= ped.start_time && t <= ped.end_time();
        assert_eq!(f.truth.pedestrians.len(), usize::from(inside), "t = {t}");
    }
}

#[test]
fn frame_time_bounds() {
    let s = sa();
    let mut st = FrameStreams::for_frame(0, 0);
    assert!(generate_frame(&s, -0.1, &mut st).is_err());
    assert!(generate_frame(&s, s.duration + 1.0, &mut st).is_err());
    assert!(generate_frame(&s, s.duration, &mut st).is_ok());
}

#[test]
fn dense_reference_shares_dynamic_returns() {
    let s = noisy(sa(), 3);
    let d = dense_reference(&s);
    assert_eq!(d.sensor.static_spacing, s.sensor.static_spacing / 4.0);
    let (a, b) = (
        simulate_frame(&s, 20).unwrap(),
        simulate_frame(&d, 20).unwrap(),
    );
    assert_eq!(a.radar.dynamic_points(), b.radar.dynamic_points());
    assert_eq!(a.depth, b.depth);
    assert!(b.radar.static_points().len() > 3 * a.radar.static_points().len());
}

#[test]
fn hidden_pedestrian_gives_one_estimate() {
    let layout = Layout {
        gap_center: 6.2,
        ..Layout::default()
    };
    let mut s = builtin("SA", &layout).unwrap();
    s.pedestrians = vec![Trajectory {
        name: "P".into(),
        waypoints: vec![Point2::new(6.2, 5.0), Point2::new(6.2, 3.0)],
        speed: 1.0,
        start_time: 0.0,
    }];
    s.validate().unwrap();
    let f = simulate_frame(&s, 15).unwrap();
    let truth = Point2::new(6.2, 3.5);
    assert!(f.truth.pedestrians[0].position.distance(truth) < 1e-12);
    assert!(!f.truth.pedestrians[0].radar_los);
    let loc = localize(
        &f.radar.dynamic_points(),
        &s.vehicle_boxes().unwrap(),
        s.ego_origin,
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(loc.estimates.len(), 1);
    assert!(loc.estimates[0].position.distance(truth) <= 0.05);
    assert!(loc.estimates[0].reflected_count >= 1);
}

#[test]
fn localization_invariants_on_noisy_frames() {
    let cfg = PipelineConfig::default();
    for s in builtin_scenarios(&Layout::default()) {
        let s = noisy(s, 8);
        let boxes = s.vehicle_boxes().unwrap();
        for f in simulate(&s).unwrap() {
            let pts = f.radar.dynamic_points();
            let a = localize(&pts, &boxes, s.ego_origin, &cfg).unwrap();
            let b = localize(&pts, &boxes, s.ego_origin, &cfg).unwrap();
            assert_eq!(a.estimates, b.estimates);
            for e in &a.estimates {
                assert!(e.reflected_count >= 1);
                assert!(e.support >= cfg.target_min_pts);
                assert!(boxes
                    .iter()
                    .all(|bx| !bx.inflated(cfg.structure_margin).contains(e.position)));
            }
            assert!(a.estimates.windows(2).all(|w| w[0].support >= w[1].support));
        }
    }
}

fn visible_pixels(s: &Scenario) -> Vec<usize> {
    let f = simulate_frame(s, 0).unwrap();
    let tf = s.camera.transform();
    let cloud = unproject(
        &f.depth,
        &s.camera.intrinsics,
        Some(&vehicle_pixels(&f.mask)),
    )
    .unwrap();
    s.vehicle_boxes()
        .unwrap()
        .iter()
        .map(|b| {
            cloud
                .points
                .iter()
                .filter(|p| {
                    b.inflated(0.05)
                        .contains(camera_to_ego(p.point, &tf).ground())
                })
                .count()
        })
        .collect()
}

/// The vehicle with more camera-visible surface is inferred more accurately.
/// At zero noise both errors vanish, so the ordering is checked under noise.
#[test]
fn more_visible_vehicle_is_inferred_better() {
    let cfg = PipelineConfig::default();
    let clean = run_trial(&sa(), &cfg, false).unwrap();
    for v in &clean.report.vehicles {
        assert!(v.radar_error.unwrap() <= 1e-9);
    }
    let px = visible_pixels(&sa());
    let mut err = [0.0; 2];
    for seed in 0..10 {
        let t = run_trial(&noisy(sa(), seed), &cfg, false).unwrap();
        for (e, v) in err.iter_mut().zip(&t.report.vehicles) {
            *e += v.radar_error.unwrap();
        }
    }
    let (more, less) = if px[0] > px[1] { (0, 1) } else { (1, 0) };
    assert!(err[more] < err[less], "pixels {px:?} errors {err:?}");
}
