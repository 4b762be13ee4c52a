//! Model files: a magic line followed by one JSON document.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cluster, Model, ModelParams};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, LabelMap};

pub const MODEL_MAGIC: &str = "FRAPMODEL 1";

#[derive(Serialize)]
struct ModelRef<'a> {
    params: &'a ModelParams,
    clusters: &'a [Cluster],
    vectors: &'a [FeatureVector],
    label_keys: Vec<String>,
}

#[derive(Deserialize)]
struct ModelOwned {
    params: ModelParams,
    clusters: Vec<Cluster>,
    vectors: Vec<FeatureVector>,
    label_keys: Vec<String>,
}

pub fn model_to_string(model: &Model) -> Result<String> {
    let body = serde_json::to_string(&ModelRef {
        params: &model.params,
        clusters: &model.clusters,
        vectors: &model.vectors,
        label_keys: model.label_map.keys(),
    })
    .map_err(|e| Error::CorruptModel(e.to_string()))?;
    Ok(format!("{MODEL_MAGIC}\n{body}\n"))
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    if header.trim_end() != MODEL_MAGIC {
        let shown: String = header.chars().take(40).collect();
        return Err(Error::VersionMismatch(format!(
            "expected `{MODEL_MAGIC}`, found `{shown}`"
        )));
    }
    let owned: ModelOwned =
        serde_json::from_str(body).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let label_map = LabelMap::from_keys(owned.label_keys)?;
    let n = owned.vectors.len();
    for cluster in &owned.clusters {
        if cluster.members.len() < 2 || cluster.members.iter().any(|&m| m >= n) {
            return Err(Error::CorruptModel("cluster membership out of range".into()));
        }
    }
    let universe: BTreeSet<_> = owned
        .vectors
        .iter()
        .flat_map(|v| v.counts.keys().copied())
        .collect();
    Ok(Model {
        params: owned.params,
        clusters: owned.clusters,
        vectors: owned.vectors,
        label_map,
        universe,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(model)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::VersionMismatch("model file is not text".into()))?;
    model_from_str(&text)
}
