//! Run configuration: defaults, a flat `key = value` file, and validation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{DEFAULT_CONSECUTIVE, DEFAULT_THETA};
use crate::error::{Error, Result};
use crate::features::DEFAULT_ITERATIONS;
use crate::metrics::{Metric, MetricKind, DEFAULT_EPSILON};
use crate::modeling::{ModelParams, DEFAULT_SLACK};
use crate::windowing::{DEFAULT_HARD_CAP, DEFAULT_NOVELTY_THRESHOLD, DEFAULT_STEP};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub iterations: usize,
    pub novelty_threshold: usize,
    pub hard_cap: usize,
    pub step: usize,
    pub metric: MetricKind,
    pub epsilon: f64,
    pub slack: f64,
    /// Absent means automatic.
    pub merge_tol: Option<f64>,
    pub theta: f64,
    pub seed: u64,
    pub consecutive: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            novelty_threshold: DEFAULT_NOVELTY_THRESHOLD,
            hard_cap: DEFAULT_HARD_CAP,
            step: DEFAULT_STEP,
            metric: MetricKind::SymmetricKld,
            epsilon: DEFAULT_EPSILON,
            slack: DEFAULT_SLACK,
            merge_tol: None,
            theta: DEFAULT_THETA,
            seed: DEFAULT_SEED,
            consecutive: DEFAULT_CONSECUTIVE,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("novelty_threshold", self.novelty_threshold),
            ("hard_cap", self.hard_cap),
            ("step", self.step),
            ("consecutive", self.consecutive),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon {} not in (0, 1)", self.epsilon)));
        }
        if !(self.slack > 0.0 && self.slack.is_finite()) {
            return Err(Error::Config(format!("slack {} must be positive", self.slack)));
        }
        if matches!(self.merge_tol, Some(t) if !(t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("merge_tol must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} not in [0, 1]", self.theta)));
        }
        Ok(())
    }

    pub fn metric(&self) -> Result<Metric> {
        Metric::new(self.metric, self.epsilon)
    }

    pub fn model_params(&self, window_size: usize) -> Result<ModelParams> {
        self.validate()?;
        Ok(ModelParams {
            metric: self.metric()?,
            iterations: self.iterations,
            window_size,
            step: self.step,
            novelty_threshold: self.novelty_threshold,
            hard_cap: self.hard_cap,
            slack: self.slack,
            merge_tol: self.merge_tol,
            seed: self.seed,
        })
    }

    /// The effective configuration as `key = value` lines.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let merge = self
            .merge_tol
            .map_or_else(|| "auto".to_string(), |t| t.to_string());
        let _ = writeln!(out, "iterations = {}", self.iterations);
        let _ = writeln!(out, "novelty_threshold = {}", self.novelty_threshold);
        let _ = writeln!(out, "hard_cap = {}", self.hard_cap);
        let _ = writeln!(out, "step = {}", self.step);
        let _ = writeln!(out, "metric = {}", self.metric);
        let _ = writeln!(out, "epsilon = {}", self.epsilon);
        let _ = writeln!(out, "slack = {}", self.slack);
        let _ = writeln!(out, "merge_tol = {merge}");
        let _ = writeln!(out, "theta = {}", self.theta);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "consecutive = {}", self.consecutive);
        out
    }
}
