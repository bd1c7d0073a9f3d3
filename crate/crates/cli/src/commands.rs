use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nlos_core::evaluation::{
    evaluate_run, summarize, table1_csv, table2_csv, ScenarioReport, Summary,
};
use nlos_core::experiment::{run_pipeline, run_trial};
use nlos_core::io::{self, layout, RunRecord, SensorMeta, Strictness, RUN_VERSION};
use nlos_core::simulator::{
    builtin, dense_reference, simulate as simulate_scenario, Layout, NoiseSpec, Scenario, Vehicle,
    BUILTIN_NAMES,
};
use nlos_core::{AlignedBox, Error, FrameResult, PipelineConfig, Point2};

use crate::plot;
use crate::{ConfigArgs, EvalArgs, ReportArgs, RunArgs, ScenarioArgs, SimulateArgs, SweepArgs};

#[derive(Debug)]
pub enum Failure {
    User(String),
    Environment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_environmental() {
            Failure::Environment(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn create_dir(p: &Path) -> Result<(), Failure> {
    fs::create_dir_all(p)
        .map_err(|e| Failure::Environment(format!("cannot create {}: {e}", p.display())))
}

fn write_text(p: &Path, text: &str) -> Result<(), Failure> {
    fs::write(p, text)
        .map_err(|e| Failure::Environment(format!("cannot write {}: {e}", p.display())))
}

fn require(p: &Path) -> Result<(), Failure> {
    if p.exists() {
        Ok(())
    } else {
        Err(Failure::User(format!("missing input {}", p.display())))
    }
}

fn is_builtin(name: &str) -> bool {
    BUILTIN_NAMES.iter().any(|b| b.eq_ignore_ascii_case(name))
}

fn noise_preset(name: &str) -> Result<NoiseSpec, Failure> {
    match name {
        "zero" => Ok(NoiseSpec::zero()),
        "benchmark" => Ok(NoiseSpec::benchmark()),
        _ => Err(Failure::User(format!(
            "unknown noise preset `{name}` (zero, benchmark)"
        ))),
    }
}

/// Resolves `--scenario` to a validated scenario, applying overrides.
pub fn load_scenario(a: &ScenarioArgs, gap: Option<f64>) -> Result<Scenario, Failure> {
    let path = Path::new(&a.scenario);
    let mut s = if is_builtin(&a.scenario) && !path.exists() {
        let layout = Layout {
            gap: gap.or(a.gap).unwrap_or(Layout::default().gap),
            ..Layout::default()
        };
        builtin(&a.scenario, &layout)?
    } else {
        if a.gap.is_some() || gap.is_some() {
            return Err(Failure::User(
                "--gap applies to built-in scenarios only".into(),
            ));
        }
        if !path.exists() {
            return Err(Failure::User(format!(
                "`{}` is neither a built-in scenario ({}) nor a file",
                a.scenario,
                BUILTIN_NAMES.join(", ")
            )));
        }
        let mode = if a.lenient {
            Strictness::Lenient
        } else {
            Strictness::Strict
        };
        io::load_scenario(path, mode)?
    };
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    if let Some(n) = &a.noise {
        s.noise = noise_preset(n)?;
    }
    s.validate()?;
    Ok(s)
}

/// Defaults, then the config file, then `--set` flags.
pub fn load_config(a: &ConfigArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            require(p)?;
            io::load_config(p, Strictness::Strict)?
        }
        None => PipelineConfig::default(),
    };
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::User(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn write_sim(dir: &Path, scenario: &Scenario) -> Result<usize, Failure> {
    let frames = simulate_scenario(scenario)?;
    create_dir(dir)?;
    io::save_scenario(&dir.join(layout::SCENARIO), scenario)?;
    let sensor: Vec<_> = frames
        .iter()
        .map(|f| (f.radar.clone(), f.depth.clone(), f.mask.clone()))
        .collect();
    io::write_recording(dir, &SensorMeta::from_scenario(scenario), &sensor)?;
    let truth: Vec<_> = frames.into_iter().map(|f| f.truth).collect();
    io::write_truth(&dir.join(layout::TRUTH), &truth)?;
    Ok(truth.len())
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    // Validation happens before anything is written.
    let s = load_scenario(&a.scenario, None)?;
    let n = write_sim(&a.out, &s)?;
    if a.dense_reference {
        write_sim(&a.out.join(layout::REFERENCE_DIR), &dense_reference(&s))?;
    }
    println!(
        "simulated {} ({n} frames, seed {}) -> {}",
        s.id,
        s.seed,
        a.out.display()
    );
    Ok(())
}

fn run_dir(input: &Path, out: &Path, cfg: &PipelineConfig) -> Result<usize, Failure> {
    require(&input.join(layout::META))?;
    require(&input.join(layout::FRAMES))?;
    let rec = io::read_recording(input)?;
    let started = Instant::now();
    let results = run_pipeline(
        rec.frames.iter().map(|(r, d, m)| (r, d, m)),
        rec.meta.camera.intrinsics,
        rec.meta.camera.transform(),
        rec.meta.ego_origin,
        cfg,
    )?;
    let elapsed = started.elapsed().as_secs_f64();
    create_dir(out)?;
    io::write_results(&out.join(layout::RESULTS), &results)?;
    io::save_json(
        &out.join(layout::RUN),
        &RunRecord {
            version: RUN_VERSION.to_string(),
            scenario: rec.meta.scenario.clone(),
            seed: rec.meta.seed,
            config: cfg.clone(),
            frames: results.len(),
        },
    )?;
    let rate = if elapsed > 0.0 {
        results.len() as f64 / elapsed
    } else {
        f64::INFINITY
    };
    println!(
        "{}: {} frames in {:.3} s ({:.0} frames/s) -> {}",
        rec.meta.scenario,
        results.len(),
        elapsed,
        rate,
        out.display()
    );
    Ok(results.len())
}

pub fn run(a: &RunArgs) -> CmdResult {
    let cfg = load_config(&a.config)?;
    run_dir(&a.input, &a.out, &cfg)?;
    let reference = a.input.join(layout::REFERENCE_DIR);
    if reference.join(layout::FRAMES).exists() {
        info!("running dense reference recording");
        run_dir(&reference, &a.out.join(layout::REFERENCE_DIR), &cfg)?;
    }
    Ok(())
}

/// Plot data written by `eval` for `report`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Overlay {
    pub scenario: String,
    pub seed: u64,
    pub ego_origin: Point2,
    pub vehicles: Vec<Vehicle>,
    pub boxes: Vec<AlignedBox>,
    /// (pedestrian, time, position).
    pub truth: Vec<(String, f64, Point2)>,
    /// (time, position).
    pub estimates: Vec<(f64, Point2)>,
}

fn overlay(
    report: &ScenarioReport,
    results: &[FrameResult],
    truth: &[nlos_core::simulator::GroundTruth],
) -> Overlay {
    Overlay {
        scenario: report.scenario.clone(),
        seed: report.seed,
        ego_origin: truth.first().map_or(Point2::ORIGIN, |g| g.ego_origin),
        vehicles: truth
            .first()
            .map(|g| g.vehicles.clone())
            .unwrap_or_default(),
        boxes: results.last().map(|r| r.boxes.clone()).unwrap_or_default(),
        truth: truth
            .iter()
            .flat_map(|g| {
                g.pedestrians
                    .iter()
                    .map(move |p| (p.name.clone(), g.timestamp, p.position))
            })
            .collect(),
        estimates: results
            .iter()
            .flat_map(|r| r.estimates.iter().map(move |e| (r.timestamp, e.position)))
            .collect(),
    }
}

pub const OVERLAY: &str = "overlay.json";

pub fn eval(a: &EvalArgs) -> CmdResult {
    let results_path = a.run.join(layout::RESULTS);
    require(&results_path)?;
    require(&a.truth)?;
    let results = io::read_results(&results_path)?;
    let truth = io::read_truth(&a.truth)?;
    let run: Option<RunRecord> = {
        let p = a.run.join(layout::RUN);
        if p.exists() {
            Some(io::load_json(&p)?)
        } else {
            None
        }
    };
    let cfg = run.as_ref().map(|r| r.config.clone()).unwrap_or_default();
    let reference_path = a.run.join(layout::REFERENCE_DIR).join(layout::RESULTS);
    let reference = if reference_path.exists() {
        Some(io::read_results(&reference_path)?)
    } else {
        None
    };
    let (scenario, seed) = run
        .as_ref()
        .map_or(("run".to_string(), 0), |r| (r.scenario.clone(), r.seed));
    let report = evaluate_run(
        &scenario,
        seed,
        &results,
        &truth,
        reference.as_deref(),
        cfg.ped_box_size,
    )?;
    create_dir(&a.out)?;
    io::save_report(&a.out.join(layout::REPORT), std::slice::from_ref(&report))?;
    io::save_json(&a.out.join(OVERLAY), &overlay(&report, &results, &truth))?;
    let summary = summarize(std::slice::from_ref(&report)).expect("one report");
    write_tables(&a.out, std::slice::from_ref(&summary))?;
    println!(
        "{}: accuracy {} AE {} IDP {} TTA {}",
        scenario,
        fmt_opt(summary.accuracy),
        fmt_opt(summary.ae),
        fmt_opt(summary.idp),
        fmt_opt(summary.tta)
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"))
}

fn write_tables(dir: &Path, rows: &[Summary]) -> CmdResult {
    write_text(&dir.join(layout::TABLE1), &table1_csv(rows))?;
    write_text(&dir.join(layout::TABLE2), &table2_csv(rows))
}

/// Groups reports by scenario, keeping first-seen order.
fn summaries(reports: &[ScenarioReport]) -> Vec<Summary> {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.scenario.as_str()) {
            names.push(&r.scenario);
        }
    }
    names
        .iter()
        .filter_map(|n| {
            let group: Vec<ScenarioReport> = reports
                .iter()
                .filter(|r| r.scenario == *n)
                .cloned()
                .collect();
            summarize(&group)
        })
        .collect()
}

pub fn report(a: &ReportArgs) -> CmdResult {
    let mut reports = Vec::new();
    let mut overlays = Vec::new();
    for dir in &a.runs {
        let p = dir.join(layout::REPORT);
        require(&p)?;
        reports.extend(io::load_report(&p)?);
        let o = dir.join(OVERLAY);
        if o.exists() {
            overlays.push(io::load_json::<Overlay>(&o)?);
        }
    }
    create_dir(&a.out)?;
    let rows = summaries(&reports);
    write_tables(&a.out, &rows)?;
    io::save_report(&a.out.join(layout::REPORT), &reports)?;
    for o in &overlays {
        let name = format!("{}_seed{}.svg", o.scenario, o.seed);
        write_text(&a.out.join(name), &plot::overlay_svg(o))?;
    }
    println!(
        "report: {} run(s), {} scenario row(s), {} plot(s) -> {}",
        reports.len(),
        rows.len(),
        overlays.len(),
        a.out.display()
    );
    Ok(())
}

/// Applies one sweep parameter value to a scenario/config pair.
fn apply_param(
    a: &SweepArgs,
    base_cfg: &PipelineConfig,
    value: &str,
) -> Result<(Scenario, PipelineConfig), Failure> {
    let key = a.param.as_str();
    let mut cfg = base_cfg.clone();
    if key == "gap" {
        let gap: f64 = value
            .parse()
            .map_err(|_| Failure::User(format!("gap value `{value}` is not a number")))?;
        return Ok((load_scenario(&a.scenario, Some(gap))?, cfg));
    }
    let mut s = load_scenario(&a.scenario, None)?;
    if let Some(field) = key
        .strip_prefix("noise.")
        .or_else(|| key.strip_prefix("sensor."))
    {
        let section = if key.starts_with("noise.") {
            "noise"
        } else {
            "sensor"
        };
        let mut doc = serde_json::to_value(&s).expect("scenario serializes");
        let slot = doc
            .get_mut(section)
            .and_then(|v| v.get_mut(field))
            .ok_or_else(|| Failure::User(format!("unknown sweep parameter `{key}`")))?;
        *slot = serde_json::from_str(value)
            .map_err(|_| Failure::User(format!("bad value `{value}` for `{key}`")))?;
        s = serde_json::from_value(doc)
            .map_err(|e| Failure::User(format!("bad value for `{key}`: {e}")))?;
        s.validate()?;
    } else {
        cfg.set(key, value)?;
    }
    Ok((s, cfg))
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: String,
    summary: Summary,
}

pub fn sweep(a: &SweepArgs) -> CmdResult {
    if a.seeds == 0 {
        return Err(Failure::User("--seeds must be at least 1".into()));
    }
    let base_cfg = load_config(&a.config)?;
    let mut jobs = Vec::new();
    for v in &a.values {
        let (s, cfg) = apply_param(a, &base_cfg, v)?;
        for k in 0..a.seeds {
            let mut s = s.clone();
            s.seed = s.seed.wrapping_add(k);
            jobs.push((v.clone(), s, cfg.clone()));
        }
    }
    let started = Instant::now();
    let reports: Vec<(String, ScenarioReport)> = jobs
        .par_iter()
        .map(|(v, s, cfg)| Ok((v.clone(), run_trial(s, cfg, a.dense_reference)?.report)))
        .collect::<Result<_, Error>>()?;
    let mut rows = Vec::new();
    for v in &a.values {
        let group: Vec<ScenarioReport> = reports
            .iter()
            .filter(|(x, _)| x == v)
            .map(|(_, r)| r.clone())
            .collect();
        if let Some(summary) = summarize(&group) {
            rows.push(SweepRow {
                value: v.clone(),
                summary,
            });
        }
    }
    create_dir(&a.out)?;
    write_text(&a.out.join("sweep.csv"), &sweep_csv(&a.param, &rows))?;
    io::save_json(&a.out.join("sweep.json"), &rows)?;
    println!(
        "sweep {}: {} value(s) x {} seed(s) in {:.2} s -> {}",
        a.param,
        a.values.len(),
        a.seeds,
        started.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,scenario,runs,tta_s,idp_m,accuracy,ae_m\n");
    for r in rows {
        let s = &r.summary;
        out.push_str(&format!(
            "{param},{},{},{},{},{},{},{}\n",
            r.value,
            s.scenario,
            s.runs,
            cell(s.tta),
            cell(s.idp),
            cell(s.accuracy),
            cell(s.ae)
        ));
    }
    out
}
