//! Python module `nlos`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use nlos_core::clustering;
use nlos_core::evaluation::{self, ScenarioReport};
use nlos_core::experiment;
use nlos_core::geometry::{AlignedBox, LineSeg, Point2};
use nlos_core::reflection;
use nlos_core::simulator::{self, Layout, NoiseSpec};
use nlos_core::{Error, PipelineConfig};

fn to_py(e: Error) -> PyErr {
    if e.is_environmental() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn point(p: (f64, f64)) -> PyResult<Point2> {
    Point2::try_new(p.0, p.1).map_err(to_py)
}

/// Axis-aligned vehicle footprint: width along x, length along y.
#[pyclass(name = "AlignedBox", from_py_object)]
#[derive(Clone)]
struct PyBox {
    inner: AlignedBox,
}

#[pymethods]
impl PyBox {
    #[new]
    fn new(center: (f64, f64), width: f64, length: f64) -> PyResult<Self> {
        let inner = AlignedBox::try_new(point(center)?, width, length).map_err(to_py)?;
        Ok(PyBox { inner })
    }

    #[getter]
    fn center(&self) -> (f64, f64) {
        (self.inner.center.x, self.inner.center.y)
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    fn corners(&self) -> Vec<(f64, f64)> {
        self.inner.corners().iter().map(|c| (c.x, c.y)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "AlignedBox(center=({}, {}), width={}, length={})",
            self.inner.center.x, self.inner.center.y, self.inner.width, self.inner.length
        )
    }
}

/// Mirror image of `p` across the line through `a` and `b`.
#[pyfunction]
fn mirror_point(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> PyResult<(f64, f64)> {
    let seg = LineSeg::try_new(point(a)?, point(b)?).map_err(to_py)?;
    let m = reflection::mirror_point(point(p)?, &seg).map_err(to_py)?;
    Ok((m.x, m.y))
}

/// Unfolds a dynamic return; returns `(corrected point, bounce count, truncated)`.
#[pyfunction]
#[pyo3(signature = (p, boxes, origin=(0.0, 0.0), max_bounces=3))]
fn unfold(
    p: (f64, f64),
    boxes: Vec<PyBox>,
    origin: (f64, f64),
    max_bounces: usize,
) -> PyResult<((f64, f64), usize, bool)> {
    let structures: Vec<AlignedBox> = boxes.iter().map(|b| b.inner).collect();
    let t = reflection::unfold(point(p)?, point(origin)?, &structures, max_bounces, 1e-9)
        .map_err(to_py)?;
    Ok(((t.corrected.x, t.corrected.y), t.bounces.len(), t.truncated))
}

/// DBSCAN labels; `-1` marks noise.
#[pyfunction]
fn dbscan(points: Vec<(f64, f64)>, eps: f64, min_pts: usize) -> PyResult<Vec<i32>> {
    let pts = points
        .into_iter()
        .map(point)
        .collect::<PyResult<Vec<_>>>()?;
    Ok(clustering::dbscan(&pts, eps, min_pts)
        .map_err(to_py)?
        .labels)
}

#[pyfunction]
fn iou(a: PyBox, b: PyBox) -> f64 {
    evaluation::iou(&a.inner, &b.inner)
}

#[pyfunction]
fn euclid_error(pred: (f64, f64), gt: (f64, f64)) -> PyResult<f64> {
    Ok(evaluation::euclid_error(point(pred)?, point(gt)?))
}

/// JSON of the default pipeline configuration.
#[pyfunction]
fn default_config() -> String {
    serde_json::to_string_pretty(&PipelineConfig::default()).expect("config serializes")
}

/// A simulated scene.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: simulator::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Built-in template `SA`, `SB` or `SC`.
    #[staticmethod]
    #[pyo3(signature = (name, gap=None))]
    fn builtin(name: &str, gap: Option<f64>) -> PyResult<Self> {
        let layout = Layout {
            gap: gap.unwrap_or(Layout::default().gap),
            ..Layout::default()
        };
        let inner = simulator::builtin(name, &layout).map_err(to_py)?;
        inner.validate().map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner =
            nlos_core::io::parse_scenario(text, "<python>", nlos_core::io::Strictness::Strict)
                .map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn to_json(&self) -> String {
        nlos_core::io::to_pretty_json(&self.inner)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    /// Switches to the benchmark noise level (or back to none).
    #[pyo3(signature = (enabled=true))]
    fn benchmark_noise(&mut self, enabled: bool) {
        self.inner.noise = if enabled {
            NoiseSpec::benchmark()
        } else {
            NoiseSpec::zero()
        };
    }

    fn vehicles(&self) -> PyResult<Vec<PyBox>> {
        Ok(self
            .inner
            .vehicle_boxes()
            .map_err(to_py)?
            .into_iter()
            .map(|inner| PyBox { inner })
            .collect())
    }
}

/// Metrics of one simulated run.
#[pyclass(name = "Report")]
struct PyReport {
    inner: ScenarioReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn accuracy(&self) -> Option<f64> {
        self.inner.accuracy()
    }

    #[getter]
    fn ae(&self) -> Option<f64> {
        self.inner.ae()
    }

    #[getter]
    fn idp(&self) -> Option<f64> {
        self.inner.idp()
    }

    #[getter]
    fn tta(&self) -> Option<f64> {
        self.inner.tta()
    }

    /// `(vehicle, radar error, reference error)` per vehicle.
    fn vehicle_errors(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        self.inner
            .vehicles
            .iter()
            .map(|v| (v.name.clone(), v.radar_error, v.reference_error))
            .collect()
    }

    fn to_json(&self) -> String {
        nlos_core::io::to_pretty_json(&self.inner)
    }
}

/// Simulates, runs and scores a scenario. `config` is optional JSON with
/// pipeline overrides.
#[pyfunction]
#[pyo3(signature = (scenario, config=None, reference=false))]
fn run_trial(
    py: Python<'_>,
    scenario: PyScenario,
    config: Option<&str>,
    reference: bool,
) -> PyResult<PyReport> {
    let cfg = match config {
        Some(text) => {
            let c: PipelineConfig =
                nlos_core::io::parse_json(text, "<config>", nlos_core::io::Strictness::Strict)
                    .map_err(to_py)?;
            c.validate().map_err(to_py)?;
            c
        }
        None => PipelineConfig::default(),
    };
    let trial = py
        .detach(|| experiment::run_trial(&scenario.inner, &cfg, reference))
        .map_err(to_py)?;
    Ok(PyReport {
        inner: trial.report,
    })
}

#[pymodule]
fn nlos(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBox>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(mirror_point, m)?)?;
    m.add_function(wrap_pyfunction!(unfold, m)?)?;
    m.add_function(wrap_pyfunction!(dbscan, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(euclid_error, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    Ok(())
}
