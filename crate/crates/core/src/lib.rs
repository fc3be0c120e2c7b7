//! Clustering of frozen embedding vectors.
//!
//! The pipeline builds an exact k-NN graph over the embeddings, turns it into
//! a Gaussian neighbor distribution, initializes a bias-free linear softmax
//! head from K-means centers and trains it to make neighbors agree while
//! keeping the mean prediction high-entropy. [`metrics`] scores the result
//! against ground truth.

#![allow(clippy::needless_range_loop)]

pub mod affinity;
pub mod error;
pub mod head;
pub mod io;
pub mod kmeans;
pub mod knn;
pub mod metrics;
pub mod numeric;
pub mod pipeline;
pub mod synth;

pub use affinity::{build_affinity, AffinityDistribution};
pub use error::{Error, Result};
pub use head::{ClusterHead, HeadInit, TrainConfig};
pub use io::{EvalReport, UNLABELED};
pub use kmeans::{KMeansConfig, KMeansResult};
pub use knn::{build_knn, Metric, NeighborGraph};
pub use numeric::{DenseMatrix, EmbeddingMatrix, Rng};
pub use synth::{BlobShape, BlobSpec};
