//! Shared fixtures for the benchmarks.

use tsp_core::affinity::build_affinity;
use tsp_core::knn::build_knn;
use tsp_core::synth::generate;
use tsp_core::{AffinityDistribution, BlobSpec, DenseMatrix, Metric};

/// Isotropic blobs with `n_clusters * points_per_cluster` rows.
pub fn blobs(n_clusters: usize, points_per_cluster: usize, dim: usize) -> DenseMatrix {
    generate(&BlobSpec::isotropic(n_clusters, points_per_cluster, dim, 0))
        .expect("valid blob spec")
        .0
}

/// Embeddings together with their Euclidean neighbor distribution.
pub fn with_affinity(x: DenseMatrix, k: usize) -> (DenseMatrix, AffinityDistribution) {
    let graph = build_knn(&x, k, Metric::Euclidean).expect("k below row count");
    let affinity = build_affinity(&graph, &x).expect("k at least 3");
    (x, affinity)
}
