//! Distances between label histograms.
//!
//! Symmetric KL divergence and Hellinger distance work on smoothed
//! distributions: every label of the shared support that a vector lacks
//! gets a constant back-off probability `epsilon`, and the remaining mass is
//! split over the present labels in proportion to their counts. Euclidean
//! distance works on raw counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Label};

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Tolerance for a distribution's total mass.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Real-valued sparse vector over labels. Feature vectors and centroids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparsePoint(pub BTreeMap<Label, f64>);

impl SparsePoint {
    pub fn from_counts(counts: &BTreeMap<Label, u64>) -> Self {
        Self(counts.iter().map(|(&l, &c)| (l, c as f64)).collect())
    }

    pub fn get(&self, label: Label) -> f64 {
        self.0.get(&label).copied().unwrap_or(0.0)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().filter(|(_, &w)| w > 0.0).map(|(&l, _)| l)
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// Coordinate-wise mean. Panics on an empty slice.
    pub fn mean<'a>(points: impl IntoIterator<Item = &'a SparsePoint>) -> SparsePoint {
        let mut sum: BTreeMap<Label, f64> = BTreeMap::new();
        let mut n = 0usize;
        for p in points {
            n += 1;
            for (&l, &w) in &p.0 {
                *sum.entry(l).or_default() += w;
            }
        }
        assert!(n > 0, "mean of no points");
        for w in sum.values_mut() {
            *w /= n as f64;
        }
        sum.retain(|_, w| *w != 0.0);
        SparsePoint(sum)
    }

    pub fn scaled(&self, factor: f64) -> SparsePoint {
        SparsePoint(self.0.iter().map(|(&l, &w)| (l, w * factor)).collect())
    }
}

impl From<&FeatureVector> for SparsePoint {
    fn from(fv: &FeatureVector) -> Self {
        fv.point()
    }
}

/// Probability mass over a label support.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: BTreeMap<Label, f64>,
}

impl Distribution {
    /// Wraps explicit probabilities. Zeros are allowed here (unsmoothed
    /// input); negative mass or a total off by more than 1e-9 is rejected.
    pub fn from_probs(probs: BTreeMap<Label, f64>) -> Result<Self> {
        if probs.values().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("negative or non-finite probability".into()));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn get(&self, label: Label) -> Option<f64> {
        self.probs.get(&label).copied()
    }

    pub fn support(&self) -> impl Iterator<Item = Label> + '_ {
        self.probs.keys().copied()
    }

    pub fn probs(&self) -> &BTreeMap<Label, f64> {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Smooths `point` over `support` with back-off probability `epsilon`.
pub fn to_distribution(
    point: &SparsePoint,
    support: &BTreeSet<Label>,
    epsilon: f64,
) -> Result<Distribution> {
    if point.labels().any(|l| !support.contains(&l)) {
        return Err(Error::SupportMismatch);
    }
    let total = point.total();
    let absent = support.iter().filter(|&&l| point.get(l) <= 0.0).count();
    if absent > 0 && total > 0.0 {
        if epsilon <= 0.0 {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if epsilon * absent as f64 >= 1.0 {
            return Err(Error::EpsilonMassOverflow { epsilon, absent });
        }
    }
    let probs = if total <= 0.0 {
        let uniform = 1.0 / support.len() as f64;
        support.iter().map(|&l| (l, uniform)).collect()
    } else {
        let present_mass = 1.0 - epsilon * absent as f64;
        support
            .iter()
            .map(|&l| {
                let w = point.get(l);
                let p = if w > 0.0 { present_mass * w / total } else { epsilon };
                (l, p)
            })
            .collect()
    };
    Ok(Distribution { probs })
}

fn check_same_support(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.probs.len() != q.probs.len() || p.probs.keys().zip(q.probs.keys()).any(|(a, b)| a != b) {
        return Err(Error::SupportMismatch);
    }
    Ok(())
}

/// KL(p||q) + KL(q||p) in nats.
pub fn kld_symmetric(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    Ok(p.probs
        .values()
        .zip(q.probs.values())
        .map(|(&a, &b)| kld_term(a, b))
        .sum())
}

/// (a - b)(ln a - ln b): one coordinate of the symmetric divergence. Written
/// this way the sum is exactly symmetric in its arguments.
fn kld_term(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b) * (a.ln() - b.ln())
    }
}

/// Hellinger distance, in [0, 1].
pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    let sum: f64 = p
        .probs
        .values()
        .zip(q.probs.values())
        .map(|(&a, &b)| hellinger_term(a, b))
        .sum();
    Ok((0.5 * sum).sqrt().min(1.0))
}

fn hellinger_term(a: f64, b: f64) -> f64 {
    let d = a.sqrt() - b.sqrt();
    d * d
}

/// L2 distance over raw counts; missing labels count as zero.
pub fn euclidean(u: &SparsePoint, v: &SparsePoint) -> f64 {
    union_pairs(u, v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Walks the label union of two sparse points in label order.
fn union_pairs<'a>(u: &'a SparsePoint, v: &'a SparsePoint) -> impl Iterator<Item = (f64, f64)> + 'a {
    union_labels(u, v).map(move |(_, a, b)| (a, b))
}

fn union_labels<'a>(
    u: &'a SparsePoint,
    v: &'a SparsePoint,
) -> impl Iterator<Item = (Label, f64, f64)> + 'a {
    let mut a = u.0.iter().filter(|(_, &w)| w > 0.0).peekable();
    let mut b = v.0.iter().filter(|(_, &w)| w > 0.0).peekable();
    std::iter::from_fn(move || match (a.peek(), b.peek()) {
        (None, None) => None,
        (Some(&(&la, &wa)), None) => {
            a.next();
            Some((la, wa, 0.0))
        }
        (None, Some(&(&lb, &wb))) => {
            b.next();
            Some((lb, 0.0, wb))
        }
        (Some(&(&la, &wa)), Some(&(&lb, &wb))) => {
            if la < lb {
                a.next();
                Some((la, wa, 0.0))
            } else if lb < la {
                b.next();
                Some((lb, 0.0, wb))
            } else {
                a.next();
                b.next();
                Some((la, wa, wb))
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[serde(rename = "kld")]
    SymmetricKld,
    Hellinger,
    Euclidean,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::SymmetricKld => "kld",
            MetricKind::Hellinger => "hellinger",
            MetricKind::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kld" => Ok(MetricKind::SymmetricKld),
            "hellinger" => Ok(MetricKind::Hellinger),
            "euclidean" => Ok(MetricKind::Euclidean),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// A metric kind bound to its back-off probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub epsilon: f64,
}

impl Metric {
    pub fn new(kind: MetricKind, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} not in (0, 1)")));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn between(&self, u: &SparsePoint, v: &SparsePoint) -> f64 {
        self.distance(u, v, None)
    }

    /// Distance between `u` and `v`. Distributions are built over the union
    /// of both label sets plus `universe`. Epsilon shrinks to 0.5/Z when the
    /// back-off mass would reach 1.
    pub fn distance(&self, u: &SparsePoint, v: &SparsePoint, universe: Option<&BTreeSet<Label>>) -> f64 {
        match self.kind {
            MetricKind::Euclidean => euclidean(u, v),
            MetricKind::SymmetricKld | MetricKind::Hellinger => {
                let pairs: Vec<(Label, f64, f64)> = union_labels(u, v).collect();
                let outside = universe.map_or(0, |uni| {
                    uni.len() - pairs.iter().filter(|(l, _, _)| uni.contains(l)).count()
                });
                let support = pairs.len() + outside;
                if support == 0 {
                    return 0.0;
                }
                let absent_u = pairs.iter().filter(|p| p.1 == 0.0).count() + outside;
                let absent_v = pairs.iter().filter(|p| p.2 == 0.0).count() + outside;
                let eps = self.effective_epsilon(absent_u.max(absent_v));
                let total_u: f64 = pairs.iter().map(|p| p.1).sum();
                let total_v: f64 = pairs.iter().map(|p| p.2).sum();
                let smooth = |w: f64, total: f64, absent: usize| {
                    if total <= 0.0 {
                        1.0 / support as f64
                    } else if w > 0.0 {
                        (1.0 - eps * absent as f64) * w / total
                    } else {
                        eps
                    }
                };
                let terms = pairs.iter().map(|&(_, a, b)| {
                    (smooth(a, total_u, absent_u), smooth(b, total_v, absent_v))
                });
                // Labels outside both vectors get equal mass on both sides
                // and contribute nothing.
                match self.kind {
                    MetricKind::SymmetricKld => terms.map(|(p, q)| kld_term(p, q)).sum(),
                    _ => {
                        let sum: f64 = terms.map(|(p, q)| hellinger_term(p, q)).sum();
                        (0.5 * sum).sqrt().min(1.0)
                    }
                }
            }
        }
    }

    fn effective_epsilon(&self, absent: usize) -> f64 {
        if absent > 0 && self.epsilon * absent as f64 >= 1.0 {
            let shrunk = 0.5 / absent as f64;
            log::warn!(
                "back-off epsilon {} too large for {absent} absent labels; using {shrunk}",
                self.epsilon
            );
            shrunk
        } else {
            self.epsilon
        }
    }
}

/// Dispatches on `kind`, building both distributions over the union support.
pub fn distance(kind: MetricKind, u: &FeatureVector, v: &FeatureVector, epsilon: f64) -> Result<f64> {
    Ok(Metric::new(kind, epsilon)?.between(&u.point(), &v.point()))
}
