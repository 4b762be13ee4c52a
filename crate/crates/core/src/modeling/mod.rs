//! The legitimate-behavior model.
//!
//! Building runs two clusterings. The first treats each instance's row of
//! the pairwise distance matrix as a point, starts one centroid per instance
//! and counts the populated clusters left after merging centroids that sit
//! closer than the merge tolerance. That count seeds the second clustering,
//! over the feature vectors themselves under the model metric. Clusters
//! left with a single member are discarded; every other cluster keeps its
//! centroid and a radius covering all of its members.

pub mod kmeans;
mod persist;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Label, LabelMap};
use crate::metrics::{Metric, MetricKind, SparsePoint};

pub use kmeans::{kmeans, lloyd, KMeansResult, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use persist::{load_model, model_from_str, model_to_string, save_model, MODEL_MAGIC};

pub const DEFAULT_SLACK: f64 = 1.0;

/// Centroids closer than this (in the metric's own units) are never treated
/// as distinct behaviors by the automatic merge tolerance.
pub const MIN_SEPARATION: f64 = 1.0;

/// Euclidean distances carry the scale of the counts, so the floor there is
/// this fraction of the median vector length instead.
pub const EUCLIDEAN_SEPARATION: f64 = 0.1;

/// A jump between consecutive single-linkage merge heights marks the
/// intra/inter boundary when the upper height is at least this multiple of
/// the lower one.
const GAP_RATIO: f64 = 2.0;

pub type DistanceMatrix = Vec<Vec<f64>>;

/// Parameters that fully determine learning and detection decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub metric: Metric,
    pub iterations: usize,
    pub window_size: usize,
    pub step: usize,
    pub novelty_threshold: usize,
    pub hard_cap: usize,
    pub slack: f64,
    /// `None` selects the automatic tolerance.
    pub merge_tol: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: SparsePoint,
    pub radius: f64,
    /// Indices into [`Model::vectors`].
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub clusters: Vec<Cluster>,
    pub vectors: Vec<FeatureVector>,
    pub label_map: LabelMap,
    /// Every label carried by a retained vector; part of the smoothing
    /// support whenever the model is consulted.
    pub universe: BTreeSet<Label>,
}

impl Model {
    pub fn distance_to(&self, point: &SparsePoint, cluster: usize) -> f64 {
        self.params
            .metric
            .distance(point, &self.clusters[cluster].centroid, Some(&self.universe))
    }

    pub fn cluster_of(&self, vector: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.members.contains(&vector))
    }
}

/// A vector left out of the model, with the second-phase cluster it was
/// isolated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded {
    pub instance_id: String,
    pub window_index: usize,
    pub cluster: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub model: Model,
    pub discarded: Vec<Discarded>,
    pub first_phase_k: usize,
}

pub fn pairwise_distance_matrix(points: &[SparsePoint], metric: &Metric) -> DistanceMatrix {
    let n = points.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| metric.between(&points[i], &points[j])).collect())
        .collect();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (off, &d) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    matrix
}

/// Outcome of the first clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    /// Merged group per instance, numbered by first appearance.
    pub groups: Vec<usize>,
    /// Populated clusters before merging.
    pub populated: usize,
    pub merge_tol: f64,
}

/// RMS difference between two distance profiles; in the units of the
/// underlying metric.
fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    kmeans::euclidean_dense(a, b) / (a.len() as f64).sqrt()
}

/// Merge heights of single-linkage clustering over `n` items, ascending.
pub fn single_linkage_heights(n: usize, pairs: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut heights = Vec::with_capacity(n.saturating_sub(1));
    for (i, j, d) in sorted {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
            heights.push(d);
        }
    }
    heights
}

fn root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Automatic merge tolerance from single-linkage merge heights: the
/// geometric midpoint of the largest ratio jump between consecutive
/// positive heights if that jump is at least [`GAP_RATIO`], never below
/// `floor`.
pub fn auto_merge_tolerance(heights: &[f64], floor: f64) -> f64 {
    let mut sorted: Vec<f64> = heights.iter().copied().filter(|d| *d > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|a, b| (a.1 / a.0).total_cmp(&(b.1 / b.0)));
    match gap {
        Some((lo, hi)) if hi >= GAP_RATIO * lo => floor.max((lo * hi).sqrt()),
        _ => floor,
    }
}

/// Lower bound of the automatic merge tolerance for `metric` over `points`.
pub fn separation_floor(metric: &Metric, points: &[SparsePoint]) -> f64 {
    if metric.kind != MetricKind::Euclidean {
        return MIN_SEPARATION;
    }
    let mut norms: Vec<f64> = points
        .iter()
        .map(|p| p.0.values().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.is_empty() {
        return MIN_SEPARATION;
    }
    norms.sort_by(f64::total_cmp);
    EUCLIDEAN_SEPARATION * norms[norms.len() / 2]
}

/// First clustering with the default floor of [`MIN_SEPARATION`].
pub fn select_k(matrix: &DistanceMatrix, merge_tol: Option<f64>) -> KSelection {
    select_k_with_floor(matrix, merge_tol, MIN_SEPARATION)
}

pub fn select_k_with_floor(matrix: &DistanceMatrix, merge_tol: Option<f64>, floor: f64) -> KSelection {
    let n = matrix.len();
    assert!(n >= 1, "select_k needs at least one instance");
    let first = lloyd(
        matrix,
        matrix.clone(),
        |a: &Vec<f64>, b: &Vec<f64>| kmeans::euclidean_dense(a, b),
        kmeans::mean_dense,
        DEFAULT_MAX_ITERS,
        DEFAULT_TOL,
    );
    let m = first.centroids.len();
    let mut pairs = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((i, j, profile_distance(&first.centroids[i], &first.centroids[j])));
        }
    }
    let tol = merge_tol
        .unwrap_or_else(|| auto_merge_tolerance(&single_linkage_heights(m, &pairs), floor));

    let mut parent: Vec<usize> = (0..m).collect();
    for &(i, j, d) in &pairs {
        if d < tol {
            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut numbering = vec![usize::MAX; m];
    let mut next = 0;
    let groups = first
        .assignment
        .iter()
        .map(|&c| {
            let r = root(&mut parent, c);
            if numbering[r] == usize::MAX {
                numbering[r] = next;
                next += 1;
            }
            numbering[r]
        })
        .collect();
    KSelection {
        k: next,
        groups,
        populated: m,
        merge_tol: tol,
    }
}

fn check_params(params: &ModelParams) -> Result<()> {
    if params.window_size == 0 || params.step == 0 {
        return Err(Error::InvalidParameter("window size and step must be positive".into()));
    }
    if !(params.slack > 0.0) {
        return Err(Error::InvalidParameter("slack must be positive".into()));
    }
    if matches!(params.merge_tol, Some(t) if !(t >= 0.0)) {
        return Err(Error::InvalidParameter("merge tolerance must be non-negative".into()));
    }
    Ok(())
}

/// Second clustering, singleton discard and radius computation.
pub fn build_model(
    vectors: Vec<FeatureVector>,
    params: ModelParams,
    label_map: LabelMap,
) -> Result<BuildOutcome> {
    check_params(&params)?;
    if vectors.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a model needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    let metric = params.metric;
    let points: Vec<SparsePoint> = vectors.iter().map(FeatureVector::point).collect();
    let matrix = pairwise_distance_matrix(&points, &metric);
    let selection = select_k_with_floor(&matrix, params.merge_tol, separation_floor(&metric, &points));
    log::debug!(
        "first phase: {} populated, K'={} (merge tolerance {})",
        selection.populated,
        selection.k,
        selection.merge_tol
    );

    let mut init = Vec::with_capacity(selection.k);
    for g in 0..selection.k {
        let members = points
            .iter()
            .zip(&selection.groups)
            .filter(|(_, &grp)| grp == g)
            .map(|(p, _)| p);
        init.push(SparsePoint::mean(members));
    }
    let second = lloyd(
        &points,
        init,
        |a, b| metric.between(a, b),
        |g: &[&SparsePoint]| SparsePoint::mean(g.iter().copied()),
        DEFAULT_MAX_ITERS,
        DEFAULT_TOL,
    );

    let mut discarded = Vec::new();
    let mut kept_groups: Vec<Vec<usize>> = Vec::new();
    for c in 0..second.centroids.len() {
        let members = second.members(c);
        if members.len() < 2 {
            for &i in &members {
                discarded.push(Discarded {
                    instance_id: vectors[i].instance_id.clone(),
                    window_index: vectors[i].window_index,
                    cluster: c,
                });
            }
        } else {
            kept_groups.push(members);
        }
    }
    if kept_groups.is_empty() {
        return Err(Error::AllSingletons);
    }

    // retained vectors keep their input order
    let mut retained: Vec<usize> = kept_groups.iter().flatten().copied().collect();
    retained.sort_unstable();
    let position = |orig: usize| retained.binary_search(&orig).expect("retained");
    let universe: BTreeSet<Label> = retained.iter().flat_map(|&i| points[i].labels()).collect();

    let clusters = kept_groups
        .iter()
        .map(|members| {
            let centroid = SparsePoint::mean(members.iter().map(|&i| &points[i]));
            let spread = members
                .iter()
                .map(|&i| metric.distance(&points[i], &centroid, Some(&universe)))
                .fold(0.0, f64::max);
            Cluster {
                radius: params.slack * spread,
                centroid,
                members: members.iter().map(|&i| position(i)).collect(),
            }
        })
        .collect();

    let mut vectors = vectors;
    let mut keep = vec![false; vectors.len()];
    for &i in &retained {
        keep[i] = true;
    }
    let mut flags = keep.into_iter();
    vectors.retain(|_| flags.next().unwrap_or(false));

    Ok(BuildOutcome {
        model: Model {
            params,
            clusters,
            vectors,
            label_map,
            universe,
        },
        discarded,
        first_phase_k: selection.k,
    })
}
