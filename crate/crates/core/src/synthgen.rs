//! Reproducible synthetic provenance streams.
//!
//! A stream is a sequence of motif instances. By default it is built from
//! blocks holding `weight` copies of each normal motif, each block shuffled,
//! so every stretch of the stream has nearly the same motif mix; `mixing =
//! "independent"` draws each motif instance by weight instead. Each motif
//! instance gets its own fresh vertices, so the order of motif instances
//! only matters where a window cuts through one. Anomalous instances get
//! one copy of the anomaly motif spliced in at a fixed edge offset.
//!
//! Within a motif, a run of consecutive edges marked `repeat` is emitted
//! once per repetition. Vertices with `repeated` scope are renewed on every
//! repetition, and `prev:<name>` names the previous repetition's vertex;
//! edges using it are skipped on the first repetition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{parse_record, ProvenanceEdge, VertexType, INSTANCE_EXTENSION};

const PREV: &str = "prev:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// New vertex per motif instance.
    #[default]
    Fresh,
    /// One vertex for the whole stream.
    Shared,
    /// New vertex per repetition.
    Repeated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixing {
    /// Shuffled blocks of `weight` copies per motif; weights must be whole.
    #[default]
    Block,
    /// Each motif instance drawn independently by weight.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexTemplate {
    pub name: String,
    /// `kind:subtype`.
    #[serde(rename = "type")]
    pub vertex_type: String,
    #[serde(default)]
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTemplate {
    pub relation: String,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotifTemplate {
    pub name: String,
    #[serde(default = "one")]
    pub weight: f64,
    /// Inclusive range the repetition count is drawn from.
    #[serde(default = "one_one")]
    pub repetitions: [usize; 2],
    pub vertices: Vec<VertexTemplate>,
    pub edges: Vec<EdgeTemplate>,
}

fn one() -> f64 {
    1.0
}

fn one_one() -> [usize; 2] {
    [1, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub instances: usize,
    /// Edges per instance stream.
    pub length: usize,
    pub seed: u64,
    #[serde(default)]
    pub anomalous: Vec<usize>,
    /// Edge position at which the anomaly motif starts.
    #[serde(default)]
    pub anomaly_offset: usize,
    /// Each stream drops a uniform 0..phase_jitter leading edges.
    #[serde(default)]
    pub phase_jitter: usize,
    #[serde(default)]
    pub mixing: Mixing,
    pub motifs: Vec<MotifTemplate>,
    pub anomaly: Option<MotifTemplate>,
}

const TABLE1: &str = include_str!("../scenarios/table1.toml");
const HOMOGENEOUS: &str = include_str!("../scenarios/homogeneous.toml");

pub fn builtin_scenarios() -> Vec<Scenario> {
    [TABLE1, HOMOGENEOUS]
        .iter()
        .map(|text| Scenario::from_toml(text).expect("built-in scenario is valid"))
        .collect()
}

pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

impl MotifTemplate {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(format!("motif `{}`: {m}", self.name)));
        if self.edges.is_empty() {
            return bad("no edges".into());
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return bad(format!("weight {} must be positive", self.weight));
        }
        let [lo, hi] = self.repetitions;
        if lo == 0 || lo > hi {
            return bad(format!("repetitions [{lo}, {hi}] must satisfy 1 <= min <= max"));
        }
        let mut scopes = BTreeMap::new();
        for v in &self.vertices {
            if v.name.is_empty() || v.name.contains([',', ':', ' ']) {
                return bad(format!("bad vertex name `{}`", v.name));
            }
            parse_type(&v.vertex_type).map_err(|_| {
                Error::InvalidScenario(format!("motif `{}`: bad vertex type `{}`", self.name, v.vertex_type))
            })?;
            if scopes.insert(v.name.as_str(), v.scope).is_some() {
                return bad(format!("duplicate vertex `{}`", v.name));
            }
        }
        for e in &self.edges {
            if e.relation.is_empty() || e.relation.contains([',', '|', ' ']) {
                return bad(format!("bad relation `{}`", e.relation));
            }
            for end in [&e.src, &e.dst] {
                let (name, prev) = match end.strip_prefix(PREV) {
                    Some(n) => (n, true),
                    None => (end.as_str(), false),
                };
                match scopes.get(name) {
                    None => return bad(format!("edge references unknown vertex `{end}`")),
                    Some(Scope::Repeated) if !e.repeat => {
                        return bad(format!("`{end}` is per repetition but the edge is not repeated"))
                    }
                    Some(s) if prev && *s != Scope::Repeated => {
                        return bad(format!("`{end}` needs a repeated vertex"))
                    }
                    Some(_) if prev && !e.repeat => return bad(format!("`{end}` outside a repeated edge")),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn parse_type(token: &str) -> Result<VertexType> {
    let edge = parse_record(&format!("x,r,a,{token},b,{token},1"))?;
    Ok(edge.src_type)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(format!("scenario `{}`: {m}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\', ' ']) {
            return bad("name must be a plain token".into());
        }
        if self.instances == 0 || self.length == 0 {
            return bad("instances and length must be positive".into());
        }
        if self.motifs.is_empty() {
            return bad("no normal motifs".into());
        }
        for m in self.motifs.iter().chain(&self.anomaly) {
            m.validate()?;
        }
        if self.mixing == Mixing::Block {
            if let Some(m) = self.motifs.iter().find(|m| m.weight.fract() != 0.0) {
                return bad(format!("block mixing needs whole weights; `{}` has {}", m.name, m.weight));
            }
        }
        if let Some(&i) = self.anomalous.iter().find(|&&i| i >= self.instances) {
            return bad(format!("anomalous index {i} outside 0..{}", self.instances));
        }
        if !self.anomalous.is_empty() {
            if self.anomaly.is_none() {
                return bad("anomalous instances but no anomaly motif".into());
            }
            if self.anomaly_offset >= self.length {
                return bad(format!(
                    "anomaly offset {} beyond stream length {}",
                    self.anomaly_offset, self.length
                ));
            }
        }
        Ok(())
    }

    pub fn is_anomalous(&self, index: usize) -> bool {
        self.anomalous.contains(&index)
    }

    pub fn file_name(&self, index: usize) -> String {
        format!("{}-{index:02}.{INSTANCE_EXTENSION}", self.name)
    }
}

/// Builds edges for one motif instance.
struct Emitter {
    edges: Vec<ProvenanceEdge>,
    next_vertex: usize,
    types: BTreeMap<String, VertexType>,
}

impl Emitter {
    fn fresh_id(&mut self, name: &str) -> String {
        self.next_vertex += 1;
        format!("{name}{}", self.next_vertex)
    }

    fn vertex_type(&mut self, token: &str) -> VertexType {
        if let Some(t) = self.types.get(token) {
            return t.clone();
        }
        let t = parse_type(token).expect("validated vertex type");
        self.types.insert(token.to_string(), t.clone());
        t
    }

    fn emit(&mut self, motif: &MotifTemplate, rng: &mut ChaCha8Rng) {
        let [lo, hi] = motif.repetitions;
        let reps = rng.random_range(lo..=hi);
        let types: BTreeMap<&str, &VertexTemplate> =
            motif.vertices.iter().map(|v| (v.name.as_str(), v)).collect();
        let mut ids: BTreeMap<String, String> = BTreeMap::new();
        for v in &motif.vertices {
            let id = match v.scope {
                Scope::Shared => v.name.clone(),
                Scope::Fresh => self.fresh_id(&v.name),
                Scope::Repeated => continue,
            };
            ids.insert(v.name.clone(), id);
        }

        let mut i = 0;
        while i < motif.edges.len() {
            if !motif.edges[i].repeat {
                self.push_edge(&motif.edges[i], &ids, &types);
                i += 1;
                continue;
            }
            let end = (i..motif.edges.len())
                .find(|&j| !motif.edges[j].repeat)
                .unwrap_or(motif.edges.len());
            for rep in 0..reps {
                for v in motif.vertices.iter().filter(|v| v.scope == Scope::Repeated) {
                    if let Some(old) = ids.remove(&v.name) {
                        ids.insert(format!("{PREV}{}", v.name), old);
                    }
                    let id = self.fresh_id(&v.name);
                    ids.insert(v.name.clone(), id);
                }
                for e in &motif.edges[i..end] {
                    let uses_prev = e.src.starts_with(PREV) || e.dst.starts_with(PREV);
                    if uses_prev && rep == 0 {
                        continue;
                    }
                    self.push_edge(e, &ids, &types);
                }
            }
            i = end;
        }
    }

    fn push_edge(
        &mut self,
        e: &EdgeTemplate,
        ids: &BTreeMap<String, String>,
        types: &BTreeMap<&str, &VertexTemplate>,
    ) {
        let type_of = |end: &str| types[end.strip_prefix(PREV).unwrap_or(end)].vertex_type.clone();
        let (src_t, dst_t) = (type_of(&e.src), type_of(&e.dst));
        let n = self.edges.len() + 1;
        let edge = ProvenanceEdge {
            edge_id: format!("e{n}"),
            relation: e.relation.clone(),
            src_id: ids[&e.src].clone(),
            src_type: self.vertex_type(&src_t),
            dst_id: ids[&e.dst].clone(),
            dst_type: self.vertex_type(&dst_t),
            seq: n as u64,
        };
        self.edges.push(edge);
    }
}

fn pick<'a>(motifs: &'a [MotifTemplate], total: f64, rng: &mut ChaCha8Rng) -> &'a MotifTemplate {
    let mut target = rng.random::<f64>() * total;
    for m in motifs {
        if target < m.weight {
            return m;
        }
        target -= m.weight;
    }
    motifs.last().expect("non-empty motif list")
}

/// Edges of instance `index`; deterministic in (seed, index).
pub fn generate_instance(scenario: &Scenario, index: usize) -> Result<Vec<ProvenanceEdge>> {
    scenario.validate()?;
    if index >= scenario.instances {
        return Err(Error::InvalidScenario(format!(
            "instance {index} outside 0..{}",
            scenario.instances
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(index as u64);
    let skip = if scenario.phase_jitter > 0 {
        rng.random_range(0..scenario.phase_jitter)
    } else {
        0
    };
    let total: f64 = scenario.motifs.iter().map(|m| m.weight).sum();
    let mut block: Vec<&MotifTemplate> = Vec::new();
    let mut anomaly = scenario
        .anomaly
        .as_ref()
        .filter(|_| scenario.is_anomalous(index));
    let mut out = Emitter {
        edges: Vec::with_capacity(scenario.length + skip),
        next_vertex: 0,
        types: BTreeMap::new(),
    };
    while out.edges.len() < scenario.length + skip {
        match anomaly {
            Some(m) if out.edges.len() >= scenario.anomaly_offset + skip => {
                out.emit(m, &mut rng);
                anomaly = None;
            }
            _ => {
                let m = match scenario.mixing {
                    Mixing::Independent => pick(&scenario.motifs, total, &mut rng),
                    Mixing::Block => {
                        if block.is_empty() {
                            for m in &scenario.motifs {
                                block.extend(std::iter::repeat_n(m, m.weight as usize));
                            }
                            block.shuffle(&mut rng);
                        }
                        block.pop().expect("non-empty block")
                    }
                };
                out.emit(m, &mut rng);
            }
        }
    }
    let edges = out
        .edges
        .into_iter()
        .skip(skip)
        .take(scenario.length)
        .enumerate()
        .map(|(i, mut e)| {
            e.edge_id = format!("e{}", i + 1);
            e.seq = i as u64 + 1;
            e
        })
        .collect();
    Ok(edges)
}

pub fn render_instance(scenario: &Scenario, index: usize, edges: &[ProvenanceEdge]) -> String {
    let mut text = format!(
        "# scenario {} instance {index} seed {}{}\n",
        scenario.name,
        scenario.seed,
        if scenario.is_anomalous(index) { " anomalous" } else { "" }
    );
    for e in edges {
        let _ = writeln!(text, "{e}");
    }
    text
}

/// Writes every instance of `scenario` into `dir`; returns the paths in
/// index order.
pub fn write_scenario(scenario: &Scenario, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    scenario.validate()?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..scenario.instances)
        .into_par_iter()
        .map(|i| {
            let edges = generate_instance(scenario, i)?;
            let path = dir.join(scenario.file_name(i));
            fs::write(&path, render_instance(scenario, i, &edges)).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Relations an anomaly motif adds on top of the normal motifs.
pub fn anomaly_relations(scenario: &Scenario) -> BTreeSet<String> {
    let normal: BTreeSet<&str> = scenario
        .motifs
        .iter()
        .flat_map(|m| m.edges.iter().map(|e| e.relation.as_str()))
        .collect();
    scenario
        .anomaly
        .iter()
        .flat_map(|m| m.edges.iter())
        .filter(|e| !normal.contains(e.relation.as_str()))
        .map(|e| e.relation.clone())
        .collect()
}
