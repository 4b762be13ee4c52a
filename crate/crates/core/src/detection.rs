//! Scoring live windows against a model, and model revision.
//!
//! A window's vector is Normal when some cluster radius covers it. If none
//! does, the second clustering is re-run over the model's vectors plus the
//! candidate, starting from the model centroids. The candidate is accepted
//! when it joins a cluster of at least two model vectors and lies within
//! those members' own radius (times the model slack) of the new centroid.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, ScopedLabelMap};
use crate::ingest::{Instance, ProvenanceEdge};
use crate::metrics::SparsePoint;
use crate::modeling::{build_model, lloyd, BuildOutcome, Model, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::windowing::WindowGraph;

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_CONSECUTIVE: usize = 1;
pub const HISTORY_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fit {
    Normal { cluster: usize, distance: f64 },
    NoFit { nearest: usize, distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Normal {
        cluster: usize,
        distance: f64,
        reclustered: bool,
    },
    Anomalous {
        nearest: usize,
        distance: f64,
        reclustered: bool,
    },
}

impl Outcome {
    pub fn is_anomalous(&self) -> bool {
        matches!(self, Outcome::Anomalous { .. })
    }

    pub fn cluster(&self) -> usize {
        match *self {
            Outcome::Normal { cluster, .. } => cluster,
            Outcome::Anomalous { nearest, .. } => nearest,
        }
    }

    pub fn distance(&self) -> f64 {
        match *self {
            Outcome::Normal { distance, .. } | Outcome::Anomalous { distance, .. } => distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub instance_id: String,
    pub window_index: usize,
    pub outcome: Outcome,
    /// Sequence number of the newest edge in the window.
    pub timestamp: u64,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = if self.outcome.is_anomalous() { "anomalous" } else { "normal" };
        write!(
            f,
            "{},{},{},{},{}",
            self.instance_id,
            self.window_index,
            label,
            self.outcome.cluster(),
            self.outcome.distance()
        )
    }
}

/// Nearest cluster whose radius covers `fv` (`d <= r`), lowest index on ties.
pub fn fit_test(model: &Model, fv: &FeatureVector) -> Fit {
    let point = fv.point();
    let distances: Vec<f64> = (0..model.clusters.len())
        .map(|c| model.distance_to(&point, c))
        .collect();
    let mut covering: Option<usize> = None;
    let mut nearest = 0;
    for (c, &d) in distances.iter().enumerate() {
        if d < distances[nearest] {
            nearest = c;
        }
        if d <= model.clusters[c].radius && covering.is_none_or(|b| d < distances[b]) {
            covering = Some(c);
        }
    }
    match covering {
        Some(cluster) => Fit::Normal {
            cluster,
            distance: distances[cluster],
        },
        None => Fit::NoFit {
            nearest,
            distance: distances[nearest],
        },
    }
}

/// Re-runs the second clustering with `point` added. True when the
/// candidate lands among model vectors and inside their spread.
fn recluster_accepts(model: &Model, point: &SparsePoint) -> bool {
    let metric = model.params.metric;
    let mut points: Vec<SparsePoint> = model.vectors.iter().map(FeatureVector::point).collect();
    points.push(point.clone());
    let init = model.clusters.iter().map(|c| c.centroid.clone()).collect();
    let result = lloyd(
        &points,
        init,
        |a, b| metric.between(a, b),
        |g: &[&SparsePoint]| SparsePoint::mean(g.iter().copied()),
        DEFAULT_MAX_ITERS,
        DEFAULT_TOL,
    );
    let candidate = points.len() - 1;
    let home = result.assignment[candidate];
    let peers: Vec<usize> = result.members(home).into_iter().filter(|&i| i != candidate).collect();
    if peers.len() < 2 {
        return false;
    }
    let dist = |p: &SparsePoint, c: &SparsePoint| metric.distance(p, c, Some(&model.universe));
    let peer_mean = SparsePoint::mean(peers.iter().map(|&i| &points[i]));
    let spread = peers.iter().map(|&i| dist(&points[i], &peer_mean)).fold(0.0, f64::max);
    dist(point, &result.centroids[home]) <= model.params.slack * spread
}

/// Fit test, then the re-cluster fallback. Never mutates the model.
pub fn detect(model: &Model, fv: &FeatureVector, timestamp: u64) -> Verdict {
    let outcome = match fit_test(model, fv) {
        Fit::Normal { cluster, distance } => Outcome::Normal {
            cluster,
            distance,
            reclustered: false,
        },
        Fit::NoFit { nearest, distance } => {
            if recluster_accepts(model, &fv.point()) {
                Outcome::Normal {
                    cluster: nearest,
                    distance,
                    reclustered: true,
                }
            } else {
                Outcome::Anomalous {
                    nearest,
                    distance,
                    reclustered: true,
                }
            }
        }
    };
    Verdict {
        instance_id: fv.instance_id.clone(),
        window_index: fv.window_index,
        outcome,
        timestamp,
    }
}

/// Extracts and scores one full window. Novel structure is labeled in a
/// private overlay so the model's map stays untouched.
pub fn score_window(model: &Model, window: &WindowGraph, instance_id: &str, window_index: usize) -> Verdict {
    let scoped = ScopedLabelMap::new(&model.label_map);
    let fv = extract_features(window, model.params.iterations, &scoped, instance_id, window_index);
    detect(model, &fv, window.seqs().last().unwrap_or(0))
}

/// Streaming monitor for one instance.
///
/// Scores the first window once `W` edges have arrived, then every further
/// `step` edges. A partial final slide is not scored.
#[derive(Debug)]
pub struct Monitor {
    model: Arc<Model>,
    instance_id: String,
    window: Option<WindowGraph>,
    buffer: Vec<ProvenanceEdge>,
    consecutive_needed: usize,
    consecutive: usize,
    alarm: bool,
    history: VecDeque<Verdict>,
    edges_seen: usize,
}

impl Monitor {
    pub fn new(model: Arc<Model>, instance_id: impl Into<String>, consecutive_needed: usize) -> Result<Self> {
        if consecutive_needed == 0 {
            return Err(Error::InvalidParameter("consecutive anomaly count must be positive".into()));
        }
        Ok(Self {
            model,
            instance_id: instance_id.into(),
            window: None,
            buffer: Vec::new(),
            consecutive_needed,
            consecutive: 0,
            alarm: false,
            history: VecDeque::new(),
            edges_seen: 0,
        })
    }

    /// Feeds one edge; returns a verdict when a window completes.
    pub fn push(&mut self, edge: ProvenanceEdge) -> Result<Option<Verdict>> {
        self.edges_seen += 1;
        self.buffer.push(edge);
        let params = &self.model.params;
        let ready = match &self.window {
            None => self.buffer.len() == params.window_size,
            Some(w) => self.buffer.len() == w.step(),
        };
        if !ready {
            return Ok(None);
        }
        let incoming = std::mem::take(&mut self.buffer);
        match &mut self.window {
            None => self.window = Some(WindowGraph::init(&incoming, params.window_size, params.step)?),
            Some(w) => w.advance(incoming),
        }
        let window = self.window.as_ref().expect("window initialized");
        let verdict = score_window(&self.model, window, &self.instance_id, window.index());
        self.record(&verdict);
        Ok(Some(verdict))
    }

    fn record(&mut self, verdict: &Verdict) {
        if verdict.outcome.is_anomalous() {
            self.consecutive += 1;
            if self.consecutive >= self.consecutive_needed {
                self.alarm = true;
            }
        } else {
            self.consecutive = 0;
        }
        if self.history.len() == HISTORY_LIMIT {
            self.history.pop_front();
        }
        self.history.push_back(verdict.clone());
    }

    /// Swaps in a revised model; takes effect from the next window.
    pub fn replace_model(&mut self, model: Arc<Model>) {
        self.model = model;
    }

    /// Ends the stream. Warns when no window was ever filled.
    pub fn finish(&self) {
        if self.window.is_none() {
            log::warn!(
                "{}: stream ended after {} edges, window needs {}; no verdicts",
                self.instance_id,
                self.edges_seen,
                self.model.params.window_size
            );
        }
    }

    pub fn alarm(&self) -> bool {
        self.alarm
    }

    pub fn history(&self) -> impl Iterator<Item = &Verdict> {
        self.history.iter()
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub instance_id: String,
    pub verdicts: Vec<Verdict>,
    pub alarm: bool,
}

impl MonitorReport {
    pub fn anomalies(&self) -> usize {
        self.verdicts.iter().filter(|v| v.outcome.is_anomalous()).count()
    }
}

/// Monitors one full stream.
pub fn monitor(
    model: Arc<Model>,
    instance_id: &str,
    edges: impl IntoIterator<Item = Result<ProvenanceEdge>>,
    consecutive_needed: usize,
) -> Result<MonitorReport> {
    let mut mon = Monitor::new(model, instance_id, consecutive_needed)?;
    let mut verdicts = Vec::new();
    for edge in edges {
        if let Some(v) = mon.push(edge?)? {
            verdicts.push(v);
        }
    }
    mon.finish();
    Ok(MonitorReport {
        instance_id: instance_id.to_string(),
        verdicts,
        alarm: mon.alarm(),
    })
}

/// One monitor per instance, run in parallel; reports in input order.
pub fn monitor_all(
    model: Arc<Model>,
    instances: &[Instance],
    consecutive_needed: usize,
) -> Result<Vec<MonitorReport>> {
    instances
        .par_iter()
        .map(|inst| monitor(model.clone(), &inst.name, inst.edges.iter().cloned().map(Ok), consecutive_needed))
        .collect()
}

/// Scores every full window of `edges` independently, rebuilding each from
/// scratch.
pub fn replay_offline(model: &Model, instance_id: &str, edges: &[ProvenanceEdge]) -> Result<Vec<Verdict>> {
    let (w, step) = (model.params.window_size, model.params.step);
    let mut verdicts = Vec::new();
    let mut start = 0;
    let mut index = 0;
    while start + w <= edges.len() {
        let window = WindowGraph::init(&edges[start..start + w], w, step)?;
        verdicts.push(score_window(model, &window, instance_id, index));
        start += step;
        index += 1;
    }
    Ok(verdicts)
}

/// True when more than `theta` of the instances seen had an anomalous
/// verdict.
pub fn revision_trigger(verdicts: &[Verdict], theta: f64) -> bool {
    let instances: BTreeSet<&str> = verdicts.iter().map(|v| v.instance_id.as_str()).collect();
    if instances.is_empty() {
        return false;
    }
    let anomalous: BTreeSet<&str> = verdicts
        .iter()
        .filter(|v| v.outcome.is_anomalous())
        .map(|v| v.instance_id.as_str())
        .collect();
    anomalous.len() as f64 / instances.len() as f64 > theta
}

/// Rebuilds the model over its vectors plus operator-confirmed false
/// positives. The confirmed vectors must be labeled with this model's map.
pub fn revise(model: &Model, confirmed: Vec<FeatureVector>) -> Result<BuildOutcome> {
    if confirmed.is_empty() {
        return Err(Error::EmptyRevision);
    }
    let mut vectors = model.vectors.clone();
    vectors.extend(confirmed);
    build_model(vectors, model.params.clone(), model.label_map.clone())
}
