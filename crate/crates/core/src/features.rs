//! Iterative vertex relabeling and label-count feature vectors.
//!
//! Every round, each vertex inserts two structural keys into the global
//! [`LabelMap`]: its current label with its sorted in-neighbor list, and its
//! current label with its sorted out-neighbor list. The two resulting labels
//! are then combined into the vertex's new label. On the first round each
//! neighbor entry also carries the relation of the connecting edge.
//!
//! New labels are computed from the previous round's assignment only and
//! published all at once. Within a round, keys are interned in sorted key
//! order (all neighbor-list keys first, then all pair keys), so label ids do
//! not depend on vertex iteration order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::SparsePoint;
use crate::windowing::{VertexKey, WindowGraph};

pub const DEFAULT_ITERATIONS: usize = 4;

/// Marker for an empty neighbor list.
const EMPTY_LIST: &str = "NULL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Get-or-insert access to a relabeling map.
pub trait Interner {
    fn intern(&self, key: &str) -> Label;
}

#[derive(Debug, Default)]
struct MapInner {
    ids: HashMap<String, Label>,
    keys: Vec<String>,
}

/// Insert-only, injective map from structural keys to dense labels.
///
/// Safe to share across threads; `intern` is a linearizable get-or-insert.
#[derive(Debug, Default)]
pub struct LabelMap {
    inner: RwLock<MapInner>,
    offset: u32,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    fn starting_at(offset: u32) -> Self {
        Self {
            inner: RwLock::default(),
            offset,
        }
    }

    /// Rebuilds a map whose label `i` is `keys[i]`.
    pub fn from_keys(keys: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(keys.len());
        for (i, key) in keys.iter().enumerate() {
            if ids.insert(key.clone(), Label(i as u32)).is_some() {
                return Err(Error::CorruptModel(format!("duplicate label key `{key}`")));
            }
        }
        Ok(Self {
            inner: RwLock::new(MapInner { ids, keys }),
            offset: 0,
        })
    }

    pub fn get(&self, key: &str) -> Option<Label> {
        self.inner.read().ids.get(key).copied()
    }

    pub fn key_of(&self, label: Label) -> Option<String> {
        let idx = label.0.checked_sub(self.offset)? as usize;
        self.inner.read().keys.get(idx).cloned()
    }

    /// Next label to be allocated.
    pub fn next_id(&self) -> u32 {
        self.offset + self.inner.read().keys.len() as u32
    }

    pub fn len(&self) -> usize {
        self.inner.read().keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keys in label order.
    pub fn keys(&self) -> Vec<String> {
        self.inner.read().keys.clone()
    }
}

impl Clone for LabelMap {
    fn clone(&self) -> Self {
        let inner = self.inner.read();
        Self {
            inner: RwLock::new(MapInner {
                ids: inner.ids.clone(),
                keys: inner.keys.clone(),
            }),
            offset: self.offset,
        }
    }
}

impl Interner for LabelMap {
    fn intern(&self, key: &str) -> Label {
        if let Some(label) = self.get(key) {
            return label;
        }
        let mut inner = self.inner.write();
        if let Some(&label) = inner.ids.get(key) {
            return label;
        }
        let label = Label(self.offset + inner.keys.len() as u32);
        inner.keys.push(key.to_string());
        inner.ids.insert(key.to_string(), label);
        label
    }
}

/// Read-only view of a base map plus a private overflow map for keys the
/// base has never seen. Lets one monitor label novel structure without
/// publishing it to other monitors.
#[derive(Debug)]
pub struct ScopedLabelMap<'a> {
    base: &'a LabelMap,
    local: LabelMap,
}

impl<'a> ScopedLabelMap<'a> {
    pub fn new(base: &'a LabelMap) -> Self {
        Self {
            base,
            local: LabelMap::starting_at(base.next_id()),
        }
    }

    pub fn novel_keys(&self) -> usize {
        self.local.len()
    }
}

impl Interner for ScopedLabelMap<'_> {
    fn intern(&self, key: &str) -> Label {
        self.base.get(key).unwrap_or_else(|| self.local.intern(key))
    }
}

/// Sparse label histogram of one window, over every relabeling round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub instance_id: String,
    pub window_index: usize,
    pub counts: BTreeMap<Label, u64>,
}

impl FeatureVector {
    pub fn new(instance_id: impl Into<String>, window_index: usize) -> Self {
        Self {
            instance_id: instance_id.into(),
            window_index,
            counts: BTreeMap::new(),
        }
    }

    pub fn from_counts(
        instance_id: impl Into<String>,
        counts: impl IntoIterator<Item = (Label, u64)>,
    ) -> Self {
        let mut fv = Self::new(instance_id, 0);
        for (label, count) in counts {
            if count > 0 {
                *fv.counts.entry(label).or_default() += count;
            }
        }
        fv
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn point(&self) -> SparsePoint {
        SparsePoint::from_counts(&self.counts)
    }

    /// `instance_id,window_index,label:count,...` in label order.
    pub fn to_line(&self) -> String {
        let mut line = format!("{},{}", self.instance_id, self.window_index);
        for (label, count) in &self.counts {
            line.push_str(&format!(",{label}:{count}"));
        }
        line
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let bad = |reason: String| Error::MalformedRecord { line: 0, reason };
        let mut fields = line.trim().split(',');
        let instance_id = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| bad("missing instance id".into()))?;
        let window_index = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("missing window index".into()))?;
        let mut fv = Self::new(instance_id, window_index);
        for field in fields {
            let (label, count) = field
                .split_once(':')
                .ok_or_else(|| bad(format!("bad entry `{field}`")))?;
            let label = label.trim().parse().map_err(|_| bad(format!("bad label `{label}`")))?;
            let count: u64 = count.trim().parse().map_err(|_| bad(format!("bad count `{count}`")))?;
            if count == 0 {
                return Err(bad(format!("zero count for label {label}")));
            }
            fv.counts.insert(Label(label), count);
        }
        Ok(fv)
    }
}

/// Window graph with dense vertex indices and adjacency lists.
#[derive(Debug, Clone)]
pub struct IndexedGraph<'w> {
    vertices: Vec<&'w VertexKey>,
    incoming: Vec<Vec<(usize, &'w str)>>,
    outgoing: Vec<Vec<(usize, &'w str)>>,
}

impl<'w> IndexedGraph<'w> {
    pub fn new(window: &'w WindowGraph) -> Self {
        let vertices: Vec<&VertexKey> = window.vertices().collect();
        let index: HashMap<(&str, &crate::ingest::VertexType), usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, (id, ty))| ((id.as_str(), ty), i))
            .collect();
        let mut incoming = vec![Vec::new(); vertices.len()];
        let mut outgoing = vec![Vec::new(); vertices.len()];
        for edge in window.edges() {
            let src = index[&(edge.src_id.as_str(), &edge.src_type)];
            let dst = index[&(edge.dst_id.as_str(), &edge.dst_type)];
            outgoing[src].push((dst, edge.relation.as_str()));
            incoming[dst].push((src, edge.relation.as_str()));
        }
        Self {
            vertices,
            incoming,
            outgoing,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &VertexKey {
        self.vertices[i]
    }
}

/// Round-0 labels: one per distinct `kind:subtype`, interned in key order.
pub fn initial_labels(graph: &IndexedGraph<'_>, map: &impl Interner) -> Vec<Label> {
    let keys: Vec<String> = graph.vertices.iter().map(|(_, ty)| ty.key()).collect();
    let distinct: BTreeSet<&str> = keys.iter().map(String::as_str).collect();
    let labels: HashMap<&str, Label> = distinct.into_iter().map(|k| (k, map.intern(k))).collect();
    keys.iter().map(|k| labels[k.as_str()]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct NeighborKey<'a> {
    label: Label,
    entries: Vec<(Label, Option<&'a str>)>,
    relations: bool,
}

impl NeighborKey<'_> {
    fn render(&self) -> String {
        let tag = if self.relations { 'n' } else { 'm' };
        let mut key = format!("{tag}|{}|", self.label);
        if self.entries.is_empty() {
            key.push_str(EMPTY_LIST);
        }
        for (i, (label, relation)) in self.entries.iter().enumerate() {
            if i > 0 {
                key.push(' ');
            }
            key.push_str(&label.to_string());
            if let Some(rel) = relation {
                key.push(' ');
                key.push_str(rel);
            }
        }
        key
    }
}

/// Key for a vertex label plus a neighbor list. Entries carry the edge
/// relation on the first round (`relations`) and are bare labels after.
pub fn neighbor_key(label: Label, entries: &[(Label, Option<&str>)], relations: bool) -> String {
    let mut entries = entries.to_vec();
    entries.sort();
    NeighborKey {
        label,
        entries,
        relations,
    }
    .render()
}

pub fn pair_key(in_label: Label, out_label: Label) -> String {
    format!("p|{in_label}|{out_label}")
}

/// One relabeling round. Reads only `labels`; returns the new assignment.
pub fn wl_iteration(
    graph: &IndexedGraph<'_>,
    labels: &[Label],
    with_edge_labels: bool,
    map: &impl Interner,
) -> Vec<Label> {
    debug_assert_eq!(labels.len(), graph.len());
    fn list<'g>(adj: &[(usize, &'g str)], labels: &[Label], relations: bool) -> Vec<(Label, Option<&'g str>)> {
        let mut entries: Vec<_> = adj
            .iter()
            .map(|&(n, rel)| (labels[n], relations.then_some(rel)))
            .collect();
        entries.sort_unstable();
        entries
    }

    let mut per_vertex = Vec::with_capacity(graph.len());
    let mut distinct = BTreeSet::new();
    for v in 0..graph.len() {
        let in_key = NeighborKey {
            label: labels[v],
            entries: list(&graph.incoming[v], labels, with_edge_labels),
            relations: with_edge_labels,
        };
        let out_key = NeighborKey {
            label: labels[v],
            entries: list(&graph.outgoing[v], labels, with_edge_labels),
            relations: with_edge_labels,
        };
        distinct.insert(in_key.clone());
        distinct.insert(out_key.clone());
        per_vertex.push((in_key, out_key));
    }
    let list_labels: BTreeMap<&NeighborKey, Label> = distinct
        .iter()
        .map(|key| (key, map.intern(&key.render())))
        .collect();

    let pairs: Vec<(Label, Label)> = per_vertex
        .iter()
        .map(|(i, o)| (list_labels[i], list_labels[o]))
        .collect();
    let pair_labels: BTreeMap<(Label, Label), Label> = pairs
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|(a, b)| ((a, b), map.intern(&pair_key(a, b))))
        .collect();
    pairs.iter().map(|p| pair_labels[p]).collect()
}

/// Per-round label assignments, round 0 first. Edge relations enter on
/// round 1 only.
pub fn relabel_rounds(
    graph: &IndexedGraph<'_>,
    iterations: usize,
    map: &impl Interner,
) -> Vec<Vec<Label>> {
    let mut rounds = Vec::with_capacity(iterations + 1);
    rounds.push(initial_labels(graph, map));
    for round in 1..=iterations {
        let next = wl_iteration(graph, &rounds[round - 1], round == 1, map);
        rounds.push(next);
    }
    rounds
}

pub fn extract_features(
    window: &WindowGraph,
    iterations: usize,
    map: &impl Interner,
    instance_id: &str,
    window_index: usize,
) -> FeatureVector {
    let graph = IndexedGraph::new(window);
    let mut fv = FeatureVector::new(instance_id, window_index);
    for round in relabel_rounds(&graph, iterations, map) {
        for label in round {
            *fv.counts.entry(label).or_default() += 1;
        }
    }
    fv
}
