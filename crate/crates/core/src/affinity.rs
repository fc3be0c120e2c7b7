//! Gaussian neighbor distribution over each point's k-NN list.
//!
//! For point `i` with neighbors `N(i)`:
//!
//! ```text
//! P(j | i) = exp(-||x_i - x_j||^2 / (2 sigma_i^2)) / C_i   for j in N(i)
//!          = 0                                              otherwise
//! ```
//!
//! where `sigma_i` is half the Euclidean distance from `x_i` to its third
//! nearest neighbor (self not counted) and `C_i` normalizes the row.

use crate::error::{Error, Result};
use crate::knn::NeighborGraph;
use crate::numeric::{squared_euclidean, EmbeddingMatrix};

/// Index of the neighbor that sets the bandwidth (the third one).
const SIGMA_RANK: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityDistribution {
    k: usize,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    sigmas: Vec<f64>,
}

impl AffinityDistribution {
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn sigma(&self, i: usize) -> f64 {
        self.sigmas[i]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Dense probability `P(j | i)`; zero outside the neighbor list.
    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.neighbors(i)
            .iter()
            .zip(self.weights(i))
            .filter(|(&nb, _)| nb == j)
            .map(|(_, &w)| w)
            .sum()
    }
}

/// Builds the neighbor distribution from a graph over `x`.
///
/// The graph's metric only decides which points are neighbors. Weights always
/// use squared Euclidean distances recomputed from `x`, and the bandwidth uses
/// the third smallest of those distances. A zero bandwidth (three or more
/// exact duplicates) yields a uniform row.
pub fn build_affinity(graph: &NeighborGraph, x: &EmbeddingMatrix) -> Result<AffinityDistribution> {
    let k = graph.k();
    if k <= SIGMA_RANK {
        return Err(Error::invalid(format!(
            "neighbor distribution needs k >= 3, got {k}"
        )));
    }
    if graph.len() != x.rows() {
        return Err(Error::LengthMismatch {
            what: "graph points vs embedding rows",
            left: graph.len(),
            right: x.rows(),
        });
    }

    let n = graph.len();
    let mut neighbors = Vec::with_capacity(n * k);
    let mut weights = Vec::with_capacity(n * k);
    let mut sigmas = Vec::with_capacity(n);
    let mut sq = vec![0.0; k];
    let mut sorted = vec![0.0; k];

    for i in 0..n {
        let nb = graph.neighbors(i);
        for (s, &j) in sq.iter_mut().zip(nb) {
            *s = squared_euclidean(x.row(i), x.row(j));
        }
        sorted.copy_from_slice(&sq);
        sorted.sort_unstable_by(f64::total_cmp);
        let sigma = 0.5 * sorted[SIGMA_RANK].sqrt();

        neighbors.extend_from_slice(nb);
        if sigma > 0.0 {
            let two_var = 2.0 * sigma * sigma;
            let start = weights.len();
            weights.extend(sq.iter().map(|&d2| (-d2 / two_var).exp()));
            let row = &mut weights[start..];
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
        } else {
            weights.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
        sigmas.push(sigma);
    }

    Ok(AffinityDistribution {
        k,
        neighbors,
        weights,
        sigmas,
    })
}
