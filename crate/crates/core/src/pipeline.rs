//! End-to-end learning, detection and revision over loaded instances.

use rayon::prelude::*;

use crate::config::Config;
use crate::detection::revise;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, Interner, LabelMap};
use crate::ingest::Instance;
use crate::modeling::{build_model, BuildOutcome, Model};
use crate::windowing::{size_stream, WindowGraph};

#[derive(Debug, Clone)]
pub struct Learned {
    pub outcome: BuildOutcome,
    pub window_size: usize,
    /// Window size each instance's stream declared on its own.
    pub instance_sizes: Vec<(String, usize)>,
}

/// Largest window size declared by any instance.
pub fn window_size(instances: &[Instance], config: &Config) -> Result<(usize, Vec<(String, usize)>)> {
    let sizes = instances
        .par_iter()
        .map(|inst| {
            size_stream(&inst.edges, config.novelty_threshold, config.hard_cap)
                .map(|w| (inst.name.clone(), w))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = sizes.iter().map(|s| s.1).max().unwrap_or(0);
    Ok((w, sizes))
}

/// Feature vector of an instance's first `window_size` edges.
pub fn first_window_vector(
    instance: &Instance,
    window_size: usize,
    step: usize,
    iterations: usize,
    map: &impl Interner,
) -> Result<FeatureVector> {
    let window = WindowGraph::init(&instance.edges, window_size, step).map_err(|e| {
        log::error!("{}: {e}", instance.name);
        e
    })?;
    Ok(extract_features(&window, iterations, map, &instance.name, 0))
}

/// Sizes the window, extracts one vector per instance and builds the model.
/// Extraction runs in instance order so label ids are reproducible.
pub fn learn(instances: &[Instance], config: &Config) -> Result<Learned> {
    config.validate()?;
    if instances.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "learning needs at least 2 instances, got {}",
            instances.len()
        )));
    }
    let (w, instance_sizes) = window_size(instances, config)?;
    if w == 0 {
        return Err(Error::InsufficientEdges { needed: 1, available: 0 });
    }
    let map = LabelMap::new();
    let vectors = instances
        .iter()
        .map(|inst| first_window_vector(inst, w, config.step, config.iterations, &map))
        .collect::<Result<Vec<_>>>()?;
    let outcome = build_model(vectors, config.model_params(w)?, map)?;
    Ok(Learned {
        outcome,
        window_size: w,
        instance_sizes,
    })
}

/// Revises `model` with the first window of each confirmed instance.
pub fn revise_with_instances(model: &Model, confirmed: &[Instance]) -> Result<BuildOutcome> {
    let base = model.clone();
    let p = &model.params;
    let vectors = confirmed
        .iter()
        .map(|inst| first_window_vector(inst, p.window_size, p.step, p.iterations, &base.label_map))
        .collect::<Result<Vec<_>>>()?;
    revise(&base, vectors)
}
