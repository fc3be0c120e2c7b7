//! Linear softmax clustering head and its training.
//!
//! The head is a bias-free linear map `phi` (`n_clusters x d`) followed by a
//! softmax, so `P(y | x) = softmax(phi x)`. It is trained on a fixed
//! embedding matrix; the embeddings are only ever borrowed immutably.

mod adam;
mod loss;
mod train;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamParams, OptimizerState};
pub use loss::{loss_and_grad, LossGrad, INNER_PRODUCT_FLOOR};
pub use train::{train, TrainOutcome};

use crate::error::{Error, Result};
use crate::numeric::{dot, softmax_in_place, DenseMatrix, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHead {
    phi: DenseMatrix,
}

impl ClusterHead {
    pub fn new(phi: DenseMatrix) -> Result<Self> {
        if phi.rows() < 2 {
            return Err(Error::invalid(
                "a clustering head needs at least 2 clusters",
            ));
        }
        if phi.cols() == 0 {
            return Err(Error::invalid("head weights have zero width"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("head weights must be finite"));
        }
        Ok(Self { phi })
    }

    #[inline]
    pub fn n_clusters(&self) -> usize {
        self.phi.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    #[inline]
    pub fn weights(&self) -> &DenseMatrix {
        &self.phi
    }

    pub fn into_weights(self) -> DenseMatrix {
        self.phi
    }

    /// Row-stochastic `n x n_clusters` matrix of cluster probabilities.
    pub fn predict(&self, x: &EmbeddingMatrix) -> Result<DenseMatrix> {
        self.check_dim(x)?;
        let nc = self.n_clusters();
        let rows: Vec<f64> = (0..x.rows())
            .into_par_iter()
            .flat_map_iter(|i| predict_row(&self.phi, x.row(i)))
            .collect();
        debug_assert_eq!(rows.len(), x.rows() * nc);
        DenseMatrix::from_vec(x.rows(), nc, rows)
    }

    /// Most probable cluster per point, ties to the smaller index.
    pub fn assign(&self, x: &EmbeddingMatrix) -> Result<Vec<usize>> {
        let probs = self.predict(x)?;
        Ok(probs.row_iter().map(argmax).collect())
    }

    fn check_dim(&self, x: &EmbeddingMatrix) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(Error::Shape {
                op: "predict",
                left: x.shape(),
                right: self.phi.shape(),
            });
        }
        Ok(())
    }
}

/// `softmax(phi x)` for one embedding.
pub(crate) fn predict_row(phi: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = phi.row_iter().map(|w| dot(w, x)).collect();
    softmax_in_place(&mut p);
    p
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadInit {
    /// Rows are the K-means centers rescaled to norm `1/sqrt(d)`.
    Kmeans,
    /// I.i.d. Gaussian entries with standard deviation `1/sqrt(d)`.
    Random,
}

impl fmt::Display for HeadInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadInit::Kmeans => "kmeans",
            HeadInit::Random => "random",
        })
    }
}

impl FromStr for HeadInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(HeadInit::Kmeans),
            "random" => Ok(HeadInit::Random),
            other => Err(Error::invalid(format!("unknown init {other:?}"))),
        }
    }
}

/// Training hyperparameters. [`TrainConfig::new`] gives the reference
/// configuration: 20 neighbors, entropy weight 3, Adam at 1e-4, batches of
/// 256, 100 epochs, K-means initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_clusters: usize,
    pub neighbors_k: usize,
    pub entropy_weight: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init: HeadInit,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Restarts of the K-means run behind [`HeadInit::Kmeans`].
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl TrainConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            neighbors_k: 20,
            entropy_weight: 3.0,
            learning_rate: 1e-4,
            batch_size: 256,
            epochs: 100,
            init: HeadInit::Kmeans,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            kmeans_restarts: 10,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.n_clusters < 2 {
            return Err(Error::invalid("n_clusters must be at least 2"));
        }
        if self.neighbors_k < 3 {
            return Err(Error::invalid("neighbors_k must be at least 3"));
        }
        if !(self.entropy_weight >= 0.0 && self.entropy_weight.is_finite()) {
            return Err(Error::invalid("entropy_weight must be nonnegative"));
        }
        if !positive(self.learning_rate) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !positive(self.adam_eps) {
            return Err(Error::invalid("adam_eps must be positive"));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::invalid("kmeans_restarts must be positive"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}
