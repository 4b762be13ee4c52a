//! Dynamic window sizing and the overlapping edge window.
//!
//! Sizing runs two counters over a learning stream: every edge examined,
//! and edges since the last never-seen type triple. The window size is
//! declared as the first counter once the second reaches the novelty
//! threshold or the first reaches the hard cap.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::ingest::{ProvenanceEdge, TypeTriple, VertexType};

pub const DEFAULT_NOVELTY_THRESHOLD: usize = 500;
pub const DEFAULT_HARD_CAP: usize = 100_000;
pub const DEFAULT_STEP: usize = 1;

#[derive(Debug, Clone)]
pub struct WindowSizer {
    edges_seen: usize,
    since_last_novel: usize,
    seen_triples: HashSet<TypeTriple>,
    novelty_threshold: usize,
    hard_cap: usize,
    declared: Option<usize>,
}

impl WindowSizer {
    pub fn new(novelty_threshold: usize, hard_cap: usize) -> Result<Self> {
        if novelty_threshold == 0 || hard_cap == 0 {
            return Err(Error::InvalidParameter(
                "novelty threshold and hard cap must be positive".into(),
            ));
        }
        Ok(Self {
            edges_seen: 0,
            since_last_novel: 0,
            seen_triples: HashSet::new(),
            novelty_threshold,
            hard_cap,
            declared: None,
        })
    }

    pub fn observe(&mut self, edge: &ProvenanceEdge) -> Result<Option<usize>> {
        self.observe_triple(edge.triple())
    }

    /// Feeds one triple; returns the window size once it is declared.
    pub fn observe_triple(&mut self, triple: TypeTriple) -> Result<Option<usize>> {
        if let Some(w) = self.declared {
            return Err(Error::ObserveAfterDeclaration(w));
        }
        self.edges_seen += 1;
        if self.seen_triples.insert(triple) {
            self.since_last_novel = 0;
        } else {
            self.since_last_novel += 1;
        }
        if self.since_last_novel == self.novelty_threshold || self.edges_seen == self.hard_cap {
            self.declared = Some(self.edges_seen);
        }
        Ok(self.declared)
    }

    pub fn declared(&self) -> Option<usize> {
        self.declared
    }

    pub fn edges_seen(&self) -> usize {
        self.edges_seen
    }

    pub fn since_last_novel(&self) -> usize {
        self.since_last_novel
    }

    pub fn distinct_triples(&self) -> usize {
        self.seen_triples.len()
    }

    /// Declared size, or every edge seen when the stream ran out first.
    pub fn finish(&self) -> usize {
        self.declared.unwrap_or(self.edges_seen)
    }
}

/// Sizes a whole learning stream.
pub fn size_stream<'a>(
    edges: impl IntoIterator<Item = &'a ProvenanceEdge>,
    novelty_threshold: usize,
    hard_cap: usize,
) -> Result<usize> {
    let mut sizer = WindowSizer::new(novelty_threshold, hard_cap)?;
    for edge in edges {
        if sizer.observe(edge)?.is_some() {
            break;
        }
    }
    Ok(sizer.finish())
}

/// Vertices are identified by id and type together.
pub type VertexKey = (String, VertexType);

/// The induced graph of the edges currently inside the window.
#[derive(Debug, Clone)]
pub struct WindowGraph {
    edges: VecDeque<ProvenanceEdge>,
    vertices: BTreeMap<VertexKey, usize>,
    size: usize,
    step: usize,
    index: usize,
    terminal: bool,
}

impl WindowGraph {
    /// Window over the first `size` edges of `edges`.
    pub fn init(edges: &[ProvenanceEdge], size: usize, step: usize) -> Result<Self> {
        if size == 0 || step == 0 {
            return Err(Error::InvalidParameter(
                "window size and step must be positive".into(),
            ));
        }
        if edges.len() < size {
            return Err(Error::InsufficientEdges {
                needed: size,
                available: edges.len(),
            });
        }
        let mut window = Self {
            edges: VecDeque::with_capacity(size),
            vertices: BTreeMap::new(),
            size,
            step,
            index: 0,
            terminal: false,
        };
        for edge in &edges[..size] {
            window.push(edge.clone());
        }
        Ok(window)
    }

    /// Unbounded graph over an arbitrary edge list.
    pub fn from_edges(edges: impl IntoIterator<Item = ProvenanceEdge>) -> Self {
        let mut window = Self {
            edges: VecDeque::new(),
            vertices: BTreeMap::new(),
            size: 0,
            step: 1,
            index: 0,
            terminal: false,
        };
        for edge in edges {
            window.push(edge);
        }
        window.size = window.edges.len();
        window
    }

    fn push(&mut self, edge: ProvenanceEdge) {
        *self
            .vertices
            .entry((edge.src_id.clone(), edge.src_type.clone()))
            .or_default() += 1;
        *self
            .vertices
            .entry((edge.dst_id.clone(), edge.dst_type.clone()))
            .or_default() += 1;
        self.edges.push_back(edge);
    }

    fn evict_oldest(&mut self) {
        let Some(edge) = self.edges.pop_front() else {
            return;
        };
        for key in [
            (edge.src_id, edge.src_type),
            (edge.dst_id, edge.dst_type),
        ] {
            if let Some(count) = self.vertices.get_mut(&key) {
                *count -= 1;
                if *count == 0 {
                    self.vertices.remove(&key);
                }
            }
        }
    }

    /// Slides by one step: evicts the oldest `step` edges and appends the
    /// next `step` edges from `incoming`. With `step > size` only the last
    /// `size` of them stay. Fewer than `step` incoming edges marks the window
    /// terminal.
    pub fn advance(&mut self, incoming: impl IntoIterator<Item = ProvenanceEdge>) {
        for _ in 0..self.step {
            self.evict_oldest();
        }
        let mut added = 0;
        for edge in incoming.into_iter().take(self.step) {
            self.push(edge);
            added += 1;
        }
        while self.edges.len() > self.size {
            self.evict_oldest();
        }
        self.terminal = added < self.step;
        self.index += 1;
    }

    pub fn edges(&self) -> impl Iterator<Item = &ProvenanceEdge> {
        self.edges.iter()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexKey> {
        self.vertices.keys()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of advances since init.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_full(&self) -> bool {
        self.edges.len() == self.size
    }

    pub fn seqs(&self) -> impl Iterator<Item = u64> + '_ {
        self.edges.iter().map(|e| e.seq)
    }
}
