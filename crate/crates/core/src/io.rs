//! File formats: scenario and config JSON, versioned JSONL streams, and PGM
//! depth and mask images.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::ScenarioReport;
use crate::geometry::Point2;
use crate::pipeline::FrameResult;
use crate::sensor::{DepthGrid, RadarFrame, SegMask};
use crate::simulator::{CameraSpec, GroundTruth, Scenario, SCENARIO_VERSION};

pub const FRAMES_SCHEMA: &str = "nlos-frames/1";
pub const TRUTH_SCHEMA: &str = "nlos-truth/1";
pub const RESULTS_SCHEMA: &str = "nlos-results/1";
pub const META_VERSION: &str = "nlos-meta/1";
pub const RUN_VERSION: &str = "nlos-run/1";
pub const REPORT_VERSION: &str = "nlos-report/1";

/// How unknown JSON fields are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

fn parse_error(source_name: &str, e: &serde_json::Error) -> Error {
    Error::Parse {
        source_name: format!("{source_name}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    }
}

/// Deserializes JSON text, rejecting (strict) or logging (lenient) unknown
/// fields.
pub fn parse_json<T: DeserializeOwned>(
    text: &str,
    source_name: &str,
    mode: Strictness,
) -> Result<T> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()))
        .map_err(|e| parse_error(source_name, &e))?;
    de.end().map_err(|e| parse_error(source_name, &e))?;
    if !unknown.is_empty() {
        match mode {
            Strictness::Strict => {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    message: format!("unknown field(s): {}", unknown.join(", ")),
                })
            }
            Strictness::Lenient => {
                for u in &unknown {
                    warn!("{source_name}: ignoring unknown field `{u}`");
                }
            }
        }
    }
    Ok(value)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn check_version(path: &Path, expected: &str, found: &str) -> Result<()> {
    if found != expected {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn peek_version(text: &str, key: &str, source_name: &str) -> Result<Option<String>> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| parse_error(source_name, &e))?;
    Ok(v.get(key).and_then(|x| x.as_str()).map(str::to_string))
}

pub fn parse_scenario(text: &str, source_name: &str, mode: Strictness) -> Result<Scenario> {
    if let Some(found) = peek_version(text, "version", source_name)? {
        check_version(Path::new(source_name), SCENARIO_VERSION, &found)?;
    }
    let s: Scenario = parse_json(text, source_name, mode)?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path, mode: Strictness) -> Result<Scenario> {
    parse_scenario(&read_text(path)?, &path.display().to_string(), mode)
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    write_bytes(path, to_pretty_json(scenario).as_bytes())
}

pub fn load_config(path: &Path, mode: Strictness) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = parse_json(&read_text(path)?, &path.display().to_string(), mode)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct JsonlHeader {
    schema: String,
}

/// Writes a header line followed by one JSON object per item.
pub fn write_jsonl<T: Serialize>(path: &Path, schema: &str, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header = serde_json::to_string(&JsonlHeader {
        schema: schema.to_string(),
    })
    .expect("header serializes");
    writeln!(w, "{header}").map_err(io)?;
    for item in items {
        let line = serde_json::to_string(item).expect("serializable item");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a stream written by [`write_jsonl`]. A zero-byte file is an empty
/// stream; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let name = path.display().to_string();
    let Some((_, first)) = lines.next() else {
        return Ok(Vec::new());
    };
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: JsonlHeader = serde_json::from_str(&first).map_err(|e| Error::Parse {
        source_name: format!("{name}:1"),
        message: format!("missing or malformed schema header: {e}"),
    })?;
    check_version(path, schema, &header.schema)?;
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: format!("{name}:{}", i + 1),
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Depth is stored in millimeters unless the header says otherwise.
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

/// A decoded binary PGM image.
#[derive(Clone, Debug, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
    /// Value of a `# scale <meters per unit>` comment, if present.
    pub scale: Option<f64>,
}

pub fn encode_pgm(pgm: &Pgm) -> Vec<u8> {
    let mut out = Vec::with_capacity(pgm.samples.len() * 2 + 64);
    out.extend_from_slice(b"P5\n");
    if let Some(s) = pgm.scale {
        out.extend_from_slice(format!("# scale {s}\n").as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).as_bytes());
    for &v in &pgm.samples {
        if pgm.maxval > 255 {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    out
}

pub fn decode_pgm(bytes: &[u8], source_name: &str) -> Result<Pgm> {
    let bad = |m: &str| Error::Parse {
        source_name: source_name.to_string(),
        message: m.to_string(),
    };
    let mut pos = 0;
    let mut tokens: Vec<String> = Vec::new();
    let mut scale = None;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("truncated PGM header"));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map_or(bytes.len(), |e| pos + e);
            let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("scale") {
                scale = parts.next().and_then(|v| v.parse::<f64>().ok());
            }
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM (expected P5)"));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(&format!("bad header number `{s}`")))
    };
    let (width, height, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must be in 1..=65535"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let bpp = if maxval > 255 { 2 } else { 1 };
    let need = width * height * bpp;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad("truncated PGM raster"))?;
    let samples = if bpp == 2 {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster.iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
        scale,
    })
}

/// 16-bit depth image; values outside the representable range become
/// invalid (0).
pub fn depth_to_pgm(depth: &DepthGrid, scale: f64) -> Pgm {
    let samples = depth
        .values()
        .iter()
        .map(|&d| {
            let q = (d / scale).round();
            if d > 0.0 && (1.0..=65535.0).contains(&q) {
                q as u16
            } else {
                0
            }
        })
        .collect();
    Pgm {
        width: depth.width(),
        height: depth.height(),
        maxval: 65535,
        samples,
        scale: Some(scale),
    }
}

pub fn pgm_to_depth(pgm: &Pgm) -> Result<DepthGrid> {
    let scale = pgm.scale.unwrap_or(DEFAULT_DEPTH_SCALE);
    DepthGrid::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&v| v as f64 * scale).collect(),
    )
}

pub fn mask_to_pgm(mask: &SegMask) -> Pgm {
    Pgm {
        width: mask.width(),
        height: mask.height(),
        maxval: 255,
        samples: mask
            .values()
            .iter()
            .map(|&v| if v > 0 { 255 } else { 0 })
            .collect(),
        scale: None,
    }
}

/// Any non-zero sample is a vehicle pixel.
pub fn pgm_to_mask(pgm: &Pgm) -> Result<SegMask> {
    SegMask::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&v| u8::from(v > 0)).collect(),
    )
}

pub fn write_depth(path: &Path, depth: &DepthGrid) -> Result<()> {
    write_bytes(path, &encode_pgm(&depth_to_pgm(depth, DEFAULT_DEPTH_SCALE)))
}

pub fn read_depth(path: &Path) -> Result<DepthGrid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    pgm_to_depth(&decode_pgm(&bytes, &path.display().to_string())?)
}

pub fn write_mask(path: &Path, mask: &SegMask) -> Result<()> {
    write_bytes(path, &encode_pgm(&mask_to_pgm(mask)))
}

pub fn read_mask(path: &Path) -> Result<SegMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    pgm_to_mask(&decode_pgm(&bytes, &path.display().to_string())?)
}

/// One line of `frames.jsonl`: radar returns plus paths of the camera
/// products, relative to the stream's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub radar: RadarFrame,
    pub depth: String,
    pub mask: String,
}

/// Sensor setup shared by every frame of a recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub ego_origin: Point2,
    pub camera: CameraSpec,
}

impl SensorMeta {
    pub fn from_scenario(s: &Scenario) -> Self {
        SensorMeta {
            version: META_VERSION.to_string(),
            scenario: s.id.clone(),
            seed: s.seed,
            ego_origin: s.ego_origin,
            camera: s.camera,
        }
    }
}

pub fn load_meta(path: &Path) -> Result<SensorMeta> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    if let Some(found) = peek_version(&text, "version", &name)? {
        check_version(path, META_VERSION, &found)?;
    }
    parse_json(&text, &name, Strictness::Strict)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_pretty_json(value).as_bytes())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(
        &read_text(path)?,
        &path.display().to_string(),
        Strictness::Strict,
    )
}

/// Summary of one pipeline run; the config snapshot plus the recorded
/// sensor data reproduce `results.jsonl` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub frames: usize,
}

pub fn write_results(path: &Path, results: &[FrameResult]) -> Result<()> {
    write_jsonl(path, RESULTS_SCHEMA, results)
}

pub fn read_results(path: &Path) -> Result<Vec<FrameResult>> {
    read_jsonl(path, RESULTS_SCHEMA)
}

pub fn write_truth(path: &Path, truth: &[GroundTruth]) -> Result<()> {
    write_jsonl(path, TRUTH_SCHEMA, truth)
}

pub fn read_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    read_jsonl(path, TRUTH_SCHEMA)
}

/// File names inside a simulation or run directory.
pub mod layout {
    pub const FRAMES: &str = "frames.jsonl";
    pub const TRUTH: &str = "truth.jsonl";
    pub const META: &str = "meta.json";
    pub const SCENARIO: &str = "scenario.json";
    pub const DEPTH_DIR: &str = "depth";
    pub const MASK_DIR: &str = "mask";
    pub const REFERENCE_DIR: &str = "reference";
    pub const RESULTS: &str = "results.jsonl";
    pub const RUN: &str = "run.json";
    pub const REPORT: &str = "report.json";
    pub const TABLE1: &str = "table1.csv";
    pub const TABLE2: &str = "table2.csv";
}

/// A loaded sensor recording.
#[derive(Clone, Debug)]
pub struct Recording {
    pub meta: SensorMeta,
    pub frames: Vec<(RadarFrame, DepthGrid, SegMask)>,
}

pub fn frame_file(dir: &str, frame: usize) -> String {
    format!("{dir}/{frame:06}.pgm")
}

/// Writes a recording directory: `meta.json`, `frames.jsonl` and the PGM
/// images.
pub fn write_recording(
    dir: &Path,
    meta: &SensorMeta,
    frames: &[(RadarFrame, DepthGrid, SegMask)],
) -> Result<()> {
    for sub in [layout::DEPTH_DIR, layout::MASK_DIR] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(p, e))?;
    }
    save_json(&dir.join(layout::META), meta)?;
    let mut records = Vec::with_capacity(frames.len());
    for (k, (radar, depth, mask)) in frames.iter().enumerate() {
        let d = frame_file(layout::DEPTH_DIR, k);
        let m = frame_file(layout::MASK_DIR, k);
        write_depth(&dir.join(&d), depth)?;
        write_mask(&dir.join(&m), mask)?;
        records.push(FrameRecord {
            frame: k,
            radar: radar.clone(),
            depth: d,
            mask: m,
        });
    }
    write_jsonl(&dir.join(layout::FRAMES), FRAMES_SCHEMA, &records)
}

pub fn read_recording(dir: &Path) -> Result<Recording> {
    let meta = load_meta(&dir.join(layout::META))?;
    let records: Vec<FrameRecord> = read_jsonl(&dir.join(layout::FRAMES), FRAMES_SCHEMA)?;
    let mut frames = Vec::with_capacity(records.len());
    for r in records {
        r.radar.validate()?;
        let depth = read_depth(&resolve(dir, &r.depth))?;
        let mask = read_mask(&resolve(dir, &r.mask))?;
        if (depth.width(), depth.height()) != (mask.width(), mask.height()) {
            return Err(Error::Validation(format!(
                "frame {}: depth is {}x{} but mask is {}x{}",
                r.frame,
                depth.width(),
                depth.height(),
                mask.width(),
                mask.height()
            )));
        }
        frames.push((r.radar, depth, mask));
    }
    let radar: Vec<RadarFrame> = frames.iter().map(|f| f.0.clone()).collect();
    crate::sensor::validate_sequence(&radar)?;
    Ok(Recording { meta, frames })
}

fn resolve(dir: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub fn save_report(path: &Path, reports: &[ScenarioReport]) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: &'a str,
        reports: &'a [ScenarioReport],
    }
    save_json(
        path,
        &Doc {
            version: REPORT_VERSION,
            reports,
        },
    )
}

pub fn load_report(path: &Path) -> Result<Vec<ScenarioReport>> {
    #[derive(Deserialize)]
    struct Doc {
        version: String,
        reports: Vec<ScenarioReport>,
    }
    let doc: Doc = load_json(path)?;
    check_version(path, REPORT_VERSION, &doc.version)?;
    Ok(doc.reports)
}
