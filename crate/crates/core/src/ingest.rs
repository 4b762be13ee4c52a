//! Edge record parsing and per-instance edge streams.
//!
//! One record per line, comma separated, seven fields:
//!
//! ```text
//! edge_id,relation,src_id,src_kind:src_subtype,dst_id,dst_kind:dst_subtype,seq
//! ```
//!
//! Fields are trimmed. Blank lines and lines starting with `#` are skipped.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extension used for per-instance edge files in batch mode.
pub const INSTANCE_EXTENSION: &str = "prov";

const FIELD_COUNT: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Entity,
    Activity,
    Agent,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Entity => "entity",
            VertexKind::Activity => "activity",
            VertexKind::Agent => "agent",
        }
    }
}

impl FromStr for VertexKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "entity" => Ok(VertexKind::Entity),
            "activity" => Ok(VertexKind::Activity),
            "agent" => Ok(VertexKind::Agent),
            _ => Err(()),
        }
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind plus a free-form subtype such as `file`, `process` or `socket`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexType {
    pub kind: VertexKind,
    pub subtype: String,
}

impl VertexType {
    pub fn new(kind: VertexKind, subtype: impl Into<String>) -> Self {
        Self {
            kind,
            subtype: subtype.into(),
        }
    }

    /// The `kind:subtype` key; also the seed label key for relabeling.
    pub fn key(&self) -> String {
        format!("{}:{}", self.kind, self.subtype)
    }

    fn parse(field: &str, line: usize) -> Result<Self> {
        let (kind, subtype) = field.split_once(':').ok_or_else(|| Error::MalformedRecord {
            line,
            reason: format!("vertex type `{field}` is not kind:subtype"),
        })?;
        let kind = kind.trim();
        let subtype = subtype.trim();
        let kind = kind.parse().map_err(|_| Error::UnknownVertexKind {
            line,
            token: kind.to_string(),
        })?;
        check_token(subtype, "subtype", line)?;
        if subtype.contains(':') {
            return Err(Error::MalformedRecord {
                line,
                reason: format!("subtype `{subtype}` contains ':'"),
            });
        }
        Ok(Self::new(kind, subtype))
    }
}

impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.subtype)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProvenanceEdge {
    pub edge_id: String,
    pub relation: String,
    pub src_id: String,
    pub src_type: VertexType,
    pub dst_id: String,
    pub dst_type: VertexType,
    pub seq: u64,
}

impl ProvenanceEdge {
    pub fn triple(&self) -> TypeTriple {
        edge_triple(self)
    }
}

impl fmt::Display for ProvenanceEdge {
    /// Canonical record form, the inverse of [`parse_record`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.edge_id,
            self.relation,
            self.src_id,
            self.src_type,
            self.dst_id,
            self.dst_type,
            self.seq
        )
    }
}

/// (relation, source type, destination type); the novelty unit for window sizing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeTriple {
    pub relation: String,
    pub src: String,
    pub dst: String,
}

impl TypeTriple {
    pub fn new(relation: impl Into<String>, src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            relation: relation.into(),
            src: src.into(),
            dst: dst.into(),
        }
    }
}

pub fn edge_triple(edge: &ProvenanceEdge) -> TypeTriple {
    TypeTriple::new(edge.relation.clone(), edge.src_type.key(), edge.dst_type.key())
}

/// Tokens end up inside relabeling keys, so they may not carry the key
/// delimiters (whitespace, `,`, `|`).
fn check_token(token: &str, what: &str, line: usize) -> Result<()> {
    if token.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            reason: format!("empty {what}"),
        });
    }
    if token.chars().any(|c| c.is_whitespace() || c == ',' || c == '|') {
        return Err(Error::MalformedRecord {
            line,
            reason: format!("{what} `{token}` contains a reserved character"),
        });
    }
    Ok(())
}

pub fn parse_record(line: &str) -> Result<ProvenanceEdge> {
    parse_record_at(line, 0)
}

fn parse_record_at(line: &str, lineno: usize) -> Result<ProvenanceEdge> {
    let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if fields.len() != FIELD_COUNT {
        return Err(Error::MalformedRecord {
            line: lineno,
            reason: format!("expected {FIELD_COUNT} fields, found {}", fields.len()),
        });
    }
    check_token(fields[0], "edge id", lineno)?;
    check_token(fields[1], "relation", lineno)?;
    check_token(fields[2], "source id", lineno)?;
    check_token(fields[4], "destination id", lineno)?;
    let src_type = VertexType::parse(fields[3], lineno)?;
    let dst_type = VertexType::parse(fields[5], lineno)?;
    let seq = fields[6].parse::<u64>().map_err(|e| Error::MalformedRecord {
        line: lineno,
        reason: format!("bad sequence number `{}`: {e}", fields[6]),
    })?;
    Ok(ProvenanceEdge {
        edge_id: fields[0].to_string(),
        relation: fields[1].to_string(),
        src_id: fields[2].to_string(),
        src_type,
        dst_id: fields[4].to_string(),
        dst_type,
        seq,
    })
}

/// Streaming reader over one instance's records. Holds one line at a time
/// and checks that `seq` strictly increases.
pub struct EdgeReader<R> {
    reader: R,
    buf: String,
    lineno: usize,
    last_seq: Option<u64>,
    done: bool,
}

impl<R: BufRead> EdgeReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            buf: String::new(),
            lineno: 0,
            last_seq: None,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for EdgeReader<R> {
    type Item = Result<ProvenanceEdge>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.lineno += 1;
            let line = self.buf.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let result = parse_record_at(line, self.lineno).and_then(|edge| {
                if let Some(previous) = self.last_seq {
                    if edge.seq <= previous {
                        return Err(Error::NonMonotonicSeq {
                            line: self.lineno,
                            previous,
                            seq: edge.seq,
                        });
                    }
                }
                self.last_seq = Some(edge.seq);
                Ok(edge)
            });
            if result.is_err() {
                self.done = true;
            }
            return Some(result);
        }
    }
}

pub fn open_instance_stream(path: impl AsRef<Path>) -> Result<EdgeReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(EdgeReader::new(BufReader::new(file)))
}

pub fn read_edges<R: Read>(reader: R) -> Result<Vec<ProvenanceEdge>> {
    EdgeReader::new(BufReader::new(reader)).collect()
}

/// A named, fully-loaded instance stream.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub edges: Vec<ProvenanceEdge>,
}

/// Loads `<name>.prov`; the instance name is the file stem.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let edges = open_instance_stream(path)?
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Io { path: None, source } => Error::io(path, source),
            other => other,
        })?;
    Ok(Instance {
        name: instance_name(path),
        edges,
    })
}

pub fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn instance_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.{INSTANCE_EXTENSION}"))
}
