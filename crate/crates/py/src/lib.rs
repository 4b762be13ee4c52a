//! Python bindings: learning, detection, revision, scenario generation and
//! the feature and metric primitives.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use frap_core::config::Config;
use frap_core::detection::{monitor, replay_offline, Verdict as CoreVerdict};
use frap_core::features::{extract_features as core_extract, Label, LabelMap};
use frap_core::ingest::{load_instance, parse_record as core_parse, Instance, ProvenanceEdge};
use frap_core::metrics::{Metric, MetricKind, SparsePoint};
use frap_core::modeling::{load_model, model_to_string, save_model, Model as CoreModel};
use frap_core::pipeline::{learn as core_learn, revise_with_instances};
use frap_core::synthgen::{builtin, write_scenario, Scenario};
use frap_core::windowing::WindowGraph;

create_exception!(frap, FrapError, PyException);

fn err(e: frap_core::Error) -> PyErr {
    FrapError::new_err(e.to_string())
}

fn metric_kind(name: &str) -> PyResult<MetricKind> {
    name.parse().map_err(|e: frap_core::Error| PyValueError::new_err(e.to_string()))
}

fn parse_lines(lines: &[String]) -> PyResult<Vec<ProvenanceEdge>> {
    lines
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| core_parse(l).map_err(err))
        .collect()
}

fn load_all(paths: &[PathBuf]) -> PyResult<Vec<Instance>> {
    paths.iter().map(|p| load_instance(p).map_err(err)).collect()
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "frap")]
#[derive(Clone)]
pub struct Verdict {
    instance_id: String,
    window_index: usize,
    anomalous: bool,
    cluster: usize,
    distance: f64,
    timestamp: u64,
}

impl From<&CoreVerdict> for Verdict {
    fn from(v: &CoreVerdict) -> Self {
        Self {
            instance_id: v.instance_id.clone(),
            window_index: v.window_index,
            anomalous: v.outcome.is_anomalous(),
            cluster: v.outcome.cluster(),
            distance: v.outcome.distance(),
            timestamp: v.timestamp,
        }
    }
}

#[pymethods]
impl Verdict {
    fn __repr__(&self) -> String {
        format!(
            "Verdict({}, window={}, {}, cluster={}, distance={})",
            self.instance_id,
            self.window_index,
            if self.anomalous { "anomalous" } else { "normal" },
            self.cluster,
            self.distance
        )
    }
}

#[pyclass(frozen, module = "frap")]
pub struct Model {
    inner: Arc<CoreModel>,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(load_model(&path).map_err(err)?),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&self.inner, &path).map_err(err)
    }

    fn to_string(&self) -> PyResult<String> {
        model_to_string(&self.inner).map_err(err)
    }

    #[getter]
    fn window_size(&self) -> usize {
        self.inner.params.window_size
    }

    #[getter]
    fn step(&self) -> usize {
        self.inner.params.step
    }

    #[getter]
    fn metric(&self) -> String {
        self.inner.params.metric.kind.to_string()
    }

    /// `(size, radius)` per cluster.
    #[getter]
    fn clusters(&self) -> Vec<(usize, f64)> {
        self.inner.clusters.iter().map(|c| (c.members.len(), c.radius)).collect()
    }

    #[getter]
    fn instances(&self) -> Vec<String> {
        self.inner.vectors.iter().map(|v| v.instance_id.clone()).collect()
    }

    /// Streams record lines through a monitor; returns one verdict per
    /// scored window.
    #[pyo3(signature = (instance_id, lines, consecutive = 1))]
    fn detect(&self, instance_id: &str, lines: Vec<String>, consecutive: usize) -> PyResult<Vec<Verdict>> {
        let edges = parse_lines(&lines)?;
        let report = monitor(self.inner.clone(), instance_id, edges.into_iter().map(Ok), consecutive).map_err(err)?;
        Ok(report.verdicts.iter().map(Verdict::from).collect())
    }

    /// Same windows as `detect`, each rebuilt from scratch.
    fn replay(&self, instance_id: &str, lines: Vec<String>) -> PyResult<Vec<Verdict>> {
        let edges = parse_lines(&lines)?;
        let verdicts = replay_offline(&self.inner, instance_id, &edges).map_err(err)?;
        Ok(verdicts.iter().map(Verdict::from).collect())
    }

    fn detect_file(&self, path: PathBuf) -> PyResult<Vec<Verdict>> {
        let inst = load_instance(&path).map_err(err)?;
        let report = monitor(self.inner.clone(), &inst.name, inst.edges.into_iter().map(Ok), 1).map_err(err)?;
        Ok(report.verdicts.iter().map(Verdict::from).collect())
    }

    /// Rebuilds the model with the first window of each confirmed file.
    fn revise(&self, paths: Vec<PathBuf>) -> PyResult<(Model, Vec<String>)> {
        let confirmed = load_all(&paths)?;
        let out = revise_with_instances(&self.inner, &confirmed).map_err(err)?;
        let discarded = out.discarded.iter().map(|d| d.instance_id.clone()).collect();
        Ok((Model { inner: Arc::new(out.model) }, discarded))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(window_size={}, metric={}, clusters={})",
            self.inner.params.window_size,
            self.inner.params.metric.kind,
            self.inner.clusters.len()
        )
    }
}

/// Learns a model from instance files. Returns the model and the names of
/// discarded instances.
#[pyfunction]
#[pyo3(signature = (paths, metric = None, slack = None, iterations = None, novelty_threshold = None, step = None))]
fn learn(
    paths: Vec<PathBuf>,
    metric: Option<&str>,
    slack: Option<f64>,
    iterations: Option<usize>,
    novelty_threshold: Option<usize>,
    step: Option<usize>,
) -> PyResult<(Model, Vec<String>)> {
    let mut config = Config::default();
    if let Some(m) = metric {
        config.metric = metric_kind(m)?;
    }
    if let Some(s) = slack {
        config.slack = s;
    }
    if let Some(i) = iterations {
        config.iterations = i;
    }
    if let Some(n) = novelty_threshold {
        config.novelty_threshold = n;
    }
    if let Some(s) = step {
        config.step = s;
    }
    let instances = load_all(&paths)?;
    let learned = core_learn(&instances, &config).map_err(err)?;
    let discarded = learned.outcome.discarded.iter().map(|d| d.instance_id.clone()).collect();
    Ok((Model { inner: Arc::new(learned.outcome.model) }, discarded))
}

/// Writes a built-in scenario (by name) or a TOML scenario file; returns
/// the instance paths.
#[pyfunction]
#[pyo3(signature = (scenario, out_dir, seed = None))]
fn generate(scenario: &str, out_dir: PathBuf, seed: Option<u64>) -> PyResult<Vec<PathBuf>> {
    let mut s = match builtin(scenario) {
        Some(s) => s,
        None => Scenario::load(scenario).map_err(err)?,
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    write_scenario(&s, &out_dir).map_err(err)
}

/// Parses one record into a dict of its fields.
#[pyfunction]
fn parse_record(line: &str) -> PyResult<HashMap<&'static str, String>> {
    let e = core_parse(line).map_err(err)?;
    Ok(HashMap::from([
        ("edge_id", e.edge_id),
        ("relation", e.relation),
        ("src_id", e.src_id),
        ("src_type", e.src_type.key()),
        ("dst_id", e.dst_id),
        ("dst_type", e.dst_type.key()),
        ("seq", e.seq.to_string()),
    ]))
}

/// Label histogram of the graph formed by `lines`, under a fresh label map.
#[pyfunction]
#[pyo3(signature = (lines, iterations = 4))]
fn extract_features(lines: Vec<String>, iterations: usize) -> PyResult<HashMap<u32, u64>> {
    let window = WindowGraph::from_edges(parse_lines(&lines)?);
    let fv = core_extract(&window, iterations, &LabelMap::new(), "py", 0);
    Ok(fv.counts.into_iter().map(|(l, c)| (l.0, c)).collect())
}

#[pyfunction]
#[pyo3(signature = (metric, u, v, epsilon = 1e-4))]
fn distance(metric: &str, u: HashMap<u32, f64>, v: HashMap<u32, f64>, epsilon: f64) -> PyResult<f64> {
    let m = Metric::new(metric_kind(metric)?, epsilon).map_err(err)?;
    let point = |h: HashMap<u32, f64>| SparsePoint(h.into_iter().map(|(l, c)| (Label(l), c)).collect());
    Ok(m.between(&point(u), &point(v)))
}

#[pymodule]
fn frap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FrapError", m.py().get_type::<FrapError>())?;
    m.add_class::<Model>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(parse_record, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    Ok(())
}
