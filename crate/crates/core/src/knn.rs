//! Exact k-nearest-neighbor graphs by full pairwise scan.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::UNLABELED;
use crate::numeric::{dot, l2_norm, squared_euclidean, EmbeddingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `||a - b||`.
    Euclidean,
    /// `1 - cos(a, b)`; a zero vector has cosine 0 with everything.
    Cosine,
    /// `-<a, b>`. The only metric whose stored distances can be negative.
    Dot,
}

impl Metric {
    #[inline]
    pub fn dissimilarity(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => squared_euclidean(a, b).sqrt(),
            Metric::Cosine => {
                let denom = l2_norm(a) * l2_norm(b);
                if denom == 0.0 {
                    1.0
                } else {
                    1.0 - dot(a, b) / denom
                }
            }
            Metric::Dot => -dot(a, b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
            Metric::Dot => "dot",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            "dot" => Ok(Metric::Dot),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// Per-point neighbor lists, self excluded, sorted by ascending dissimilarity
/// with ties broken by smaller index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    metric: Metric,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.neighbors.len().checked_div(self.k).unwrap_or(0)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

/// Exact k-NN under `metric`. Fails when `k >= n`; see [`build_knn_clamped`].
pub fn build_knn(x: &EmbeddingMatrix, k: usize, metric: Metric) -> Result<NeighborGraph> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "k-NN needs at least 2 points, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "k = {k} leaves no room to exclude self among {n} points"
        )));
    }

    let rows: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| nearest_for_row(x, i, k, metric))
        .collect();

    let mut neighbors = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for row in rows {
        for (d, j) in row {
            neighbors.push(j);
            distances.push(d);
        }
    }
    Ok(NeighborGraph {
        k,
        metric,
        neighbors,
        distances,
    })
}

/// As [`build_knn`], but silently uses `min(k, n - 1)` neighbors.
pub fn build_knn_clamped(x: &EmbeddingMatrix, k: usize, metric: Metric) -> Result<NeighborGraph> {
    build_knn(x, k.min(x.rows().saturating_sub(1)), metric)
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn nearest_for_row(x: &EmbeddingMatrix, i: usize, k: usize, metric: Metric) -> Vec<(f64, usize)> {
    let query = x.row(i);
    let mut cand: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&j| j != i)
        .map(|j| (metric.dissimilarity(query, x.row(j)), j))
        .collect();
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelConsistency {
    /// Fraction of each point's neighbors that share its label.
    pub per_point: Vec<f64>,
    pub mean: f64,
}

/// Share of each point's k nearest neighbors carrying the same label.
pub fn label_consistency(graph: &NeighborGraph, labels: &[u32]) -> Result<LabelConsistency> {
    if labels.len() != graph.len() {
        return Err(Error::LengthMismatch {
            what: "graph points vs labels",
            left: graph.len(),
            right: labels.len(),
        });
    }
    if let Some(index) = labels.iter().position(|&l| l == UNLABELED) {
        return Err(Error::SentinelLabel { index });
    }
    let k = graph.k() as f64;
    let per_point: Vec<f64> = (0..graph.len())
        .map(|i| {
            let same = graph
                .neighbors(i)
                .iter()
                .filter(|&&j| labels[j] == labels[i])
                .count();
            same as f64 / k
        })
        .collect();
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    Ok(LabelConsistency { per_point, mean })
}
