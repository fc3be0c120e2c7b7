//! Lloyd's K-means with k-means++ seeding and best-of-N restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{l2_norm, squared_euclidean, DenseMatrix, EmbeddingMatrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub n_clusters: usize,
    pub max_iter: usize,
    /// Stop once `(previous - current) <= tol * previous` for the inertia.
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest final inertia wins.
    pub n_init: usize,
}

impl KMeansConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: DenseMatrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Lloyd iterations performed by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

pub fn kmeans(x: &EmbeddingMatrix, config: &KMeansConfig, rng: &mut Rng) -> Result<KMeansResult> {
    let n = x.rows();
    let k = config.n_clusters;
    if k < 2 {
        return Err(Error::invalid("n_clusters must be at least 2"));
    }
    if n < k {
        return Err(Error::invalid(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if config.n_init == 0 {
        return Err(Error::invalid("n_init must be at least 1"));
    }
    if config.tol.is_nan() || config.tol < 0.0 {
        return Err(Error::invalid("tol must be nonnegative"));
    }

    let mut best: Option<KMeansResult> = None;
    for _ in 0..config.n_init {
        let stream = rng.next_u64();
        let mut run_rng = rng.split(stream);
        let run = lloyd(x, config, &mut run_rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn lloyd(x: &EmbeddingMatrix, config: &KMeansConfig, rng: &mut Rng) -> KMeansResult {
    let mut centers = plus_plus_seeds(x, config.n_clusters, rng);
    let (mut assignments, mut dists) = assign(x, &centers);
    let mut inertia: f64 = dists.iter().sum();
    let mut history = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        iterations += 1;
        update_centers(x, &mut centers, &assignments, &dists);
        let (next_assign, next_dists) = assign(x, &centers);
        let next_inertia: f64 = next_dists.iter().sum();
        history.push(next_inertia);
        let unchanged = next_assign == assignments;
        let done = unchanged || inertia - next_inertia <= config.tol * inertia;
        assignments = next_assign;
        dists = next_dists;
        inertia = next_inertia;
        if done {
            converged = true;
            break;
        }
    }

    KMeansResult {
        centers,
        assignments,
        inertia,
        iterations,
        converged,
        inertia_history: history,
    }
}

/// Greedy k-means++: the first seed is uniform; each further seed is the best,
/// by resulting potential, of `2 + ln k` candidates drawn with probability
/// proportional to squared distance from the nearest chosen seed.
fn plus_plus_seeds(x: &EmbeddingMatrix, k: usize, rng: &mut Rng) -> DenseMatrix {
    let n = x.rows();
    let trials = 2 + (k as f64).ln() as usize;
    let mut centers = DenseMatrix::zeros(k, x.cols());
    let first = rng.below(n);
    centers.row_mut(0).copy_from_slice(x.row(first));
    let mut closest: Vec<f64> = x
        .row_iter()
        .map(|r| squared_euclidean(r, x.row(first)))
        .collect();

    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let candidates: Vec<usize> = (0..trials)
            .map(|_| {
                if total > 0.0 {
                    sample_by_weight(&closest, rng.uniform() * total)
                } else {
                    rng.below(n)
                }
            })
            .collect();
        // ties keep the earliest candidate
        let (pick, updated) = candidates
            .par_iter()
            .map(|&cand| {
                let updated: Vec<f64> = closest
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| d.min(squared_euclidean(x.row(i), x.row(cand))))
                    .collect();
                (cand, updated)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(cand, updated)| (updated.iter().sum::<f64>(), cand, updated))
            .fold(
                None,
                |best: Option<(f64, usize, Vec<f64>)>, item| match best {
                    Some(b) if b.0 <= item.0 => Some(b),
                    _ => Some(item),
                },
            )
            .map(|(_, cand, updated)| (cand, updated))
            .expect("at least two candidates");
        centers.row_mut(c).copy_from_slice(x.row(pick));
        closest = updated;
    }
    centers
}

/// Index where the running sum of `weights` first exceeds `target`, skipping
/// zero weights so an already chosen point is never drawn again.
fn sample_by_weight(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            chosen = Some(i);
            if acc > target {
                break;
            }
        }
    }
    chosen.expect("positive total implies a positive entry")
}

/// Nearest center per point (ties to the smaller index) and its squared distance.
fn assign(x: &EmbeddingMatrix, centers: &DenseMatrix) -> (Vec<usize>, Vec<f64>) {
    (0..x.rows())
        .into_par_iter()
        .map(|i| nearest_center(x.row(i), centers))
        .unzip()
}

pub(crate) fn nearest_center(point: &[f64], centers: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.row_iter().enumerate() {
        let d = squared_euclidean(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Recomputes each center as its members' mean, summing in point order.
/// Empty clusters move onto the points currently farthest from their centers.
fn update_centers(
    x: &EmbeddingMatrix,
    centers: &mut DenseMatrix,
    assignments: &[usize],
    dists: &[f64],
) {
    let k = centers.rows();
    let mut sums = DenseMatrix::zeros(k, x.cols());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        sums.row_mut(c)
            .iter_mut()
            .zip(x.row(i))
            .for_each(|(s, v)| *s += v);
    }

    let mut far: Vec<usize> = Vec::new();
    if counts.contains(&0) {
        far = (0..x.rows()).collect();
        far.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
    }
    let mut far = far.into_iter();

    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centers
                .row_mut(c)
                .iter_mut()
                .zip(sums.row(c))
                .for_each(|(m, s)| *m = s * inv);
        } else if let Some(p) = far.next() {
            centers.row_mut(c).copy_from_slice(x.row(p));
        }
    }
}

/// Head weights from K-means centers: each center scaled to norm `1/sqrt(D)`.
pub fn init_head_from_kmeans(centers: &DenseMatrix) -> Result<DenseMatrix> {
    let scale = 1.0 / (centers.cols() as f64).sqrt();
    let mut phi = centers.clone();
    for i in 0..phi.rows() {
        let norm = l2_norm(centers.row(i));
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNormCenter { index: i });
        }
        phi.row_mut(i)
            .iter_mut()
            .for_each(|v| *v = *v / norm * scale);
    }
    Ok(phi)
}
