//! Behavioral anomaly detection over streamed provenance graphs.
//!
//! Learning sizes a sliding window from type-triple novelty, turns the first
//! window of every training instance into a label histogram by iterative
//! neighborhood relabeling, and clusters the histograms into a model of
//! centroids and radii. Detection slides the same window over live streams
//! and scores each window against the model. Revision rebuilds the model
//! with operator-confirmed false positives.

pub mod config;
pub mod detection;
pub mod error;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod modeling;
pub mod pipeline;
pub mod synthgen;
pub mod windowing;

pub use config::Config;
pub use detection::{detect, fit_test, monitor, revise, revision_trigger, Fit, Monitor, Outcome, Verdict};
pub use error::{Error, Result};
pub use features::{extract_features, FeatureVector, Label, LabelMap};
pub use ingest::{edge_triple, parse_record, Instance, ProvenanceEdge, TypeTriple, VertexKind, VertexType};
pub use metrics::{Metric, MetricKind, SparsePoint};
pub use modeling::{build_model, load_model, save_model, Cluster, Model, ModelParams};
pub use windowing::{WindowGraph, WindowSizer};
