//! Small typed multigraphs with a brute-force isomorphism test and a
//! plain color-refinement reference.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use frap_core::ingest::{parse_record, ProvenanceEdge};

const TYPES: [&str; 3] = ["entity:file", "entity:socket", "activity:process"];
const RELATIONS: [&str; 2] = ["used", "wasGeneratedBy"];

#[derive(Debug, Clone)]
pub struct SmallGraph {
    pub types: Vec<&'static str>,
    pub edges: Vec<(usize, usize, &'static str)>,
}

impl SmallGraph {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.len()).map(|i| format!("v{i}")).collect()
    }

    pub fn edges(&self, names: &[String]) -> Vec<ProvenanceEdge> {
        self.edges
            .iter()
            .enumerate()
            .map(|(n, &(a, b, rel))| {
                let line = format!("e{n},{rel},{},{},{},{},{}", names[a], self.types[a], names[b], self.types[b], n + 1);
                parse_record(&line).unwrap()
            })
            .collect()
    }

    /// Drops vertices no edge touches and renumbers the rest.
    fn compact(mut self) -> Self {
        let used: BTreeSet<usize> = self.edges.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        let index: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        self.types = used.iter().map(|&v| self.types[v]).collect();
        for e in &mut self.edges {
            e.0 = index[&e.0];
            e.1 = index[&e.1];
        }
        self
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize) -> SmallGraph {
    let n = rng.random_range(2..=max_vertices);
    let types = (0..n).map(|_| *TYPES.choose(rng).unwrap()).collect();
    let m = rng.random_range(1..=2 * n);
    let edges = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), *RELATIONS.choose(rng).unwrap()))
        .collect();
    SmallGraph { types, edges }.compact()
}

/// A one-step edit of `g`.
pub fn perturb(g: &SmallGraph, rng: &mut ChaCha8Rng) -> SmallGraph {
    let mut h = g.clone();
    let n = h.len();
    let e = rng.random_range(0..h.edges.len());
    match rng.random_range(0..5) {
        0 => h.edges[e].2 = if h.edges[e].2 == RELATIONS[0] { RELATIONS[1] } else { RELATIONS[0] },
        1 => h.edges[e].1 = rng.random_range(0..n),
        2 => {
            let v = rng.random_range(0..n);
            h.types[v] = *TYPES.choose(rng).unwrap();
        }
        3 => h.edges.push((rng.random_range(0..n), rng.random_range(0..n), *RELATIONS.choose(rng).unwrap())),
        _ => h.edges[e] = (h.edges[e].1, h.edges[e].0, h.edges[e].2),
    }
    h.compact()
}

fn edge_multiset(edges: impl Iterator<Item = (usize, usize, &'static str)>) -> BTreeMap<(usize, usize, &'static str), usize> {
    let mut out = BTreeMap::new();
    for e in edges {
        *out.entry(e).or_default() += 1;
    }
    out
}

/// Exhaustive search over type-preserving bijections.
pub fn isomorphic(a: &SmallGraph, b: &SmallGraph) -> bool {
    if a.len() != b.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut ta = a.types.clone();
    let mut tb = b.types.clone();
    ta.sort();
    tb.sort();
    if ta != tb {
        return false;
    }
    let target = edge_multiset(b.edges.iter().copied());
    let mut perm = vec![usize::MAX; a.len()];
    let mut used = vec![false; a.len()];

    fn search(
        i: usize,
        a: &SmallGraph,
        b: &SmallGraph,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        target: &BTreeMap<(usize, usize, &'static str), usize>,
    ) -> bool {
        if i == a.len() {
            let mapped = edge_multiset(a.edges.iter().map(|&(x, y, r)| (perm[x], perm[y], r)));
            return &mapped == target;
        }
        for j in 0..b.len() {
            if !used[j] && a.types[i] == b.types[j] {
                used[j] = true;
                perm[i] = j;
                if search(i + 1, a, b, perm, used, target) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    search(0, a, b, &mut perm, &mut used, &target)
}

type Signature = (usize, Vec<(usize, &'static str)>, Vec<(usize, &'static str)>);

/// Color refinement run jointly over `graphs`: round 0 colors by type,
/// each later round by the old color plus sorted in- and out-neighbor
/// colors, with relations on round 1 only. Returns each graph's multiset
/// of (round, color) over rounds 0..=rounds.
pub fn reference_wl(graphs: &[&SmallGraph], rounds: usize) -> Vec<BTreeMap<(usize, usize), usize>> {
    let type_index: BTreeMap<&str, usize> = graphs
        .iter()
        .flat_map(|g| g.types.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let mut colors: Vec<Vec<usize>> = graphs
        .iter()
        .map(|g| g.types.iter().map(|t| type_index[t]).collect())
        .collect();
    let mut hist = vec![BTreeMap::new(); graphs.len()];
    let record = |hist: &mut Vec<BTreeMap<(usize, usize), usize>>, colors: &[Vec<usize>], round: usize| {
        for (g, cs) in colors.iter().enumerate() {
            for &c in cs {
                *hist[g].entry((round, c)).or_default() += 1;
            }
        }
    };
    record(&mut hist, &colors, 0);

    for round in 1..=rounds {
        let sigs: Vec<Vec<Signature>> = graphs
            .iter()
            .zip(&colors)
            .map(|(g, cs)| {
                (0..g.len())
                    .map(|v| {
                        let rel = |r: &'static str| if round == 1 { r } else { "" };
                        let mut ins: Vec<_> =
                            g.edges.iter().filter(|e| e.1 == v).map(|e| (cs[e.0], rel(e.2))).collect();
                        let mut outs: Vec<_> =
                            g.edges.iter().filter(|e| e.0 == v).map(|e| (cs[e.1], rel(e.2))).collect();
                        ins.sort();
                        outs.sort();
                        (cs[v], ins, outs)
                    })
                    .collect()
            })
            .collect();
        let table: BTreeMap<&Signature, usize> = sigs
            .iter()
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        colors = sigs.iter().map(|gs| gs.iter().map(|s| table[s]).collect()).collect();
        record(&mut hist, &colors, round);
    }
    hist
}
