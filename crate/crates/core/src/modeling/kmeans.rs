//! Lloyd iteration over arbitrary point types.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<P> {
    /// Cluster index per point, into `centroids`.
    pub assignment: Vec<usize>,
    pub centroids: Vec<P>,
    pub iterations: usize,
}

impl<P> KMeansResult<P> {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

fn nearest<P>(point: &P, centroids: &[P], dist: &impl Fn(&P, &P) -> f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Lloyd iteration from the given initial centroids.
///
/// Ties go to the lowest centroid index. Clusters that lose every point are
/// dropped, not reseeded. Stops when the assignment repeats, every centroid
/// moves less than `tol`, or after `max_iters` rounds.
pub fn lloyd<P, D, M>(
    points: &[P],
    init: Vec<P>,
    dist: D,
    mean: M,
    max_iters: usize,
    tol: f64,
) -> KMeansResult<P>
where
    D: Fn(&P, &P) -> f64,
    M: Fn(&[&P]) -> P,
{
    assert!(!init.is_empty() && !points.is_empty());
    let mut centroids = init;
    let mut assignment: Vec<usize> = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let raw: Vec<usize> = points.iter().map(|p| nearest(p, &centroids, &dist)).collect();

        // compact away empty clusters, keeping centroid order
        let mut used = vec![false; centroids.len()];
        for &c in &raw {
            used[c] = true;
        }
        let mut remap = vec![0; centroids.len()];
        let mut next = 0;
        for (c, &u) in used.iter().enumerate() {
            if u {
                remap[c] = next;
                next += 1;
            }
        }
        let new_assignment: Vec<usize> = raw.iter().map(|&c| remap[c]).collect();

        let mut groups: Vec<Vec<&P>> = vec![Vec::new(); next];
        for (p, &c) in points.iter().zip(&new_assignment) {
            groups[c].push(p);
        }
        let new_centroids: Vec<P> = groups.iter().map(|g| mean(g)).collect();

        let stable = new_assignment == assignment;
        let small_shift = next == centroids.len()
            && centroids
                .iter()
                .zip(&new_centroids)
                .all(|(old, new)| dist(old, new) < tol);
        assignment = new_assignment;
        centroids = new_centroids;
        if stable || small_shift || iterations >= max_iters {
            break;
        }
    }
    KMeansResult {
        assignment,
        centroids,
        iterations,
    }
}

pub fn euclidean_dense(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn mean_dense(points: &[&Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut sum = vec![0.0; dim];
    for p in points {
        for (s, x) in sum.iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    let n = points.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    sum
}

/// Seeded k-means++ choice of `k` initial centroids.
pub fn plus_plus_init<P: Clone>(
    points: &[P],
    k: usize,
    seed: u64,
    dist: &impl Fn(&P, &P) -> f64,
) -> Vec<P> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut nearest_sq: Vec<f64> = points
        .iter()
        .map(|p| dist(p, &points[chosen[0]]).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total <= 0.0 {
            // every point coincides with a chosen centroid
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, w) in nearest_sq.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        chosen.push(pick);
        for (i, p) in points.iter().enumerate() {
            let d = dist(p, &points[pick]).powi(2);
            if d < nearest_sq[i] {
                nearest_sq[i] = d;
            }
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Euclidean k-means on dense points. With `k == points.len()` the
/// centroids start at the points themselves; otherwise k-means++ seeded by
/// `seed`.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult<Vec<f64>>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK {
            k,
            points: points.len(),
        });
    }
    let dist = |a: &Vec<f64>, b: &Vec<f64>| euclidean_dense(a, b);
    let init = if k == points.len() {
        points.to_vec()
    } else {
        plus_plus_init(points, k, seed, &dist)
    };
    Ok(lloyd(points, init, dist, mean_dense, max_iters, tol))
}
