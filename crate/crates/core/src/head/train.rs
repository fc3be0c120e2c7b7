use super::{adam_step, loss_and_grad, ClusterHead, HeadInit, OptimizerState, TrainConfig};
use crate::affinity::AffinityDistribution;
use crate::error::{Error, Result};
use crate::kmeans::{init_head_from_kmeans, kmeans, KMeansConfig, KMeansResult};
use crate::numeric::{DenseMatrix, EmbeddingMatrix, Rng};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: ClusterHead,
    /// Mean minibatch loss of each epoch.
    pub loss_history: Vec<f64>,
    pub initial_weights: DenseMatrix,
    /// The K-means run behind a K-means initialization.
    pub kmeans: Option<KMeansResult>,
}

/// Trains a head on frozen embeddings.
///
/// Each epoch visits every point once in a freshly shuffled order, in
/// minibatches of `config.batch_size` (the last one may be short), taking one
/// Adam step per batch.
pub fn train(
    x: &EmbeddingMatrix,
    affinity: &AffinityDistribution,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = x.rows();
    if affinity.len() != n {
        return Err(Error::LengthMismatch {
            what: "affinity rows vs embedding rows",
            left: affinity.len(),
            right: n,
        });
    }
    let mut init_rng = rng.split(1);
    let mut order_rng = rng.split(2);

    let (phi, km) = initial_weights(x, config, &mut init_rng)?;
    let mut head = ClusterHead::new(phi)?;
    let initial_weights = head.weights().clone();

    let adam = config.adam();
    let mut state = OptimizerState::new(head.phi.as_slice().len());
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order_rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let lg = loss_and_grad(&head.phi, x, affinity, batch, config.entropy_weight)?;
            adam_step(&mut state, &mut head.phi, &lg.grad, &adam)?;
            total += lg.loss;
            batches += 1;
        }
        if !head.phi.is_finite() {
            return Err(Error::Degenerate("head weights diverged".into()));
        }
        loss_history.push(total / batches as f64);
    }

    Ok(TrainOutcome {
        head,
        loss_history,
        initial_weights,
        kmeans: km,
    })
}

fn initial_weights(
    x: &EmbeddingMatrix,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(DenseMatrix, Option<KMeansResult>)> {
    match config.init {
        HeadInit::Kmeans => {
            let km_config = KMeansConfig {
                n_clusters: config.n_clusters,
                max_iter: config.kmeans_max_iter,
                tol: config.kmeans_tol,
                n_init: config.kmeans_restarts,
            };
            let km = kmeans(x, &km_config, rng)?;
            let phi = init_head_from_kmeans(&km.centers)?;
            Ok((phi, Some(km)))
        }
        HeadInit::Random => {
            let d = x.cols();
            let std = 1.0 / (d as f64).sqrt();
            let data = (0..config.n_clusters * d)
                .map(|_| rng.normal() * std)
                .collect();
            Ok((DenseMatrix::from_vec(config.n_clusters, d, data)?, None))
        }
    }
}
