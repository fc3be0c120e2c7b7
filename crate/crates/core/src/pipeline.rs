//! End-to-end runs: k-NN graph, neighbor distribution, head training,
//! assignment and evaluation, plus the K-means baseline, the neighbor label
//! consistency diagnostic and the neighbor-count sweep.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::affinity::build_affinity;
use crate::error::{Error, Result};
use crate::head::{train, ClusterHead, TrainConfig};
use crate::io::{check_paired, ConsistencySummary, EvalReport, UNLABELED};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::knn::{build_knn, label_consistency, LabelConsistency, Metric};
use crate::metrics::{ari_from_table, hungarian_acc_from_table, nmi_from_table, ContingencyTable};
use crate::numeric::{EmbeddingMatrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterOptions {
    pub train: TrainConfig,
    /// Metric that selects each point's neighbors.
    pub metric: Metric,
}

impl ClusterOptions {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            train: TrainConfig::new(n_clusters),
            metric: Metric::Euclidean,
        }
    }

    /// Every setting that influences the output, as flat key/value pairs.
    pub fn echo(&self) -> BTreeMap<String, serde_json::Value> {
        let mut out = match serde_json::to_value(&self.train) {
            Ok(serde_json::Value::Object(map)) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        out.insert("metric".into(), self.metric.as_str().into());
        out
    }
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub assignments: Vec<usize>,
    pub head: ClusterHead,
    pub loss_history: Vec<f64>,
    pub report: EvalReport,
}

/// Full pipeline on frozen embeddings. Metrics are filled in when `labels`
/// is given.
pub fn run_cluster(
    x: &EmbeddingMatrix,
    labels: Option<&[u32]>,
    options: &ClusterOptions,
) -> Result<ClusterRun> {
    options.train.validate()?;
    if let Some(labels) = labels {
        check_paired(x, labels)?;
    }
    let graph = build_knn(x, options.train.neighbors_k, options.metric)?;
    let affinity = build_affinity(&graph, x)?;
    let mut rng = Rng::new(options.train.seed);
    let outcome = train(x, &affinity, &options.train, &mut rng)?;
    let assignments = outcome.head.assign(x)?;

    let mut report = evaluate(&assignments, labels, options.train.n_clusters)?;
    report.config = options.echo();
    report.loss_history = Some(outcome.loss_history.clone());
    Ok(ClusterRun {
        assignments,
        head: outcome.head,
        loss_history: outcome.loss_history,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub report: EvalReport,
}

/// K-means applied directly to the embeddings.
pub fn run_kmeans_baseline(
    x: &EmbeddingMatrix,
    labels: Option<&[u32]>,
    config: &KMeansConfig,
    seed: u64,
) -> Result<KMeansRun> {
    if let Some(labels) = labels {
        check_paired(x, labels)?;
    }
    let result = kmeans(x, config, &mut Rng::new(seed))?;
    let mut report = evaluate(&result.assignments, labels, config.n_clusters)?;
    let mut echo: BTreeMap<String, serde_json::Value> = match serde_json::to_value(config)? {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    echo.insert("seed".into(), seed.into());
    echo.insert("inertia".into(), result.inertia.into());
    report.config = echo;
    Ok(KMeansRun {
        assignments: result.assignments,
        inertia: result.inertia,
        report,
    })
}

/// Scores assignments against ground truth. Points whose label is
/// [`UNLABELED`] are left out of the metrics; `n_clusters` fixes the number
/// of confusion columns and cluster-size entries.
pub fn evaluate(
    assignments: &[usize],
    labels: Option<&[u32]>,
    n_clusters: usize,
) -> Result<EvalReport> {
    if assignments.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_clusters = n_clusters.max(assignments.iter().max().map_or(0, |m| m + 1));
    let mut sizes = vec![0usize; n_clusters];
    for &a in assignments {
        sizes[a] += 1;
    }
    let mut report = EvalReport::unlabeled(assignments.len(), sizes);
    let Some(labels) = labels else {
        return Ok(report);
    };
    if labels.len() != assignments.len() {
        return Err(Error::LengthMismatch {
            what: "assignments vs labels",
            left: assignments.len(),
            right: labels.len(),
        });
    }

    let (pred, truth): (Vec<usize>, Vec<u32>) = assignments
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l != UNLABELED)
        .map(|(&a, &l)| (a, l))
        .unzip();
    if pred.is_empty() {
        return Err(Error::invalid("no labeled points to evaluate"));
    }

    let table = ContingencyTable::new(&pred, &truth)?;
    let acc = hungarian_acc_from_table(&table);
    let classes = table.true_ids.clone();
    let mut confusion = vec![vec![0u64; n_clusters]; classes.len()];
    for (&p, &t) in pred.iter().zip(&truth) {
        let c = classes.binary_search(&t).expect("class present in table");
        confusion[c][p] += 1;
    }
    let mut mapping = vec![None; n_clusters];
    for &(cluster, class) in &acc.mapping {
        mapping[cluster] = Some(class);
    }

    report.acc = Some(acc.acc);
    report.nmi = Some(nmi_from_table(&table));
    report.ari = Some(ari_from_table(&table));
    report.n_evaluated = pred.len();
    report.class_ids = Some(classes);
    report.confusion = Some(confusion);
    report.cluster_to_class = Some(mapping);
    Ok(report)
}

/// Neighbor label consistency under `metric` with `k` neighbors.
pub fn knn_diagnostic(
    x: &EmbeddingMatrix,
    labels: &[u32],
    k: usize,
    metric: Metric,
) -> Result<(LabelConsistency, ConsistencySummary)> {
    check_paired(x, labels)?;
    let graph = build_knn(x, k, metric)?;
    let consistency = label_consistency(&graph, labels)?;
    let summary = summarize(&consistency.per_point, k, consistency.mean);
    Ok((consistency, summary))
}

fn summarize(values: &[f64], k: usize, mean: f64) -> ConsistencySummary {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    ConsistencySummary {
        k,
        mean,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        median,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub const DEFAULT_SWEEP_KS: [usize; 6] = [5, 10, 15, 20, 25, 30];

/// Runs the full pipeline once per neighbor count, everything else fixed.
pub fn sweep_k(
    x: &EmbeddingMatrix,
    labels: &[u32],
    base: &ClusterOptions,
    ks: &[usize],
) -> Result<Vec<SweepRow>> {
    ks.iter()
        .map(|&k| {
            let mut options = base.clone();
            options.train.neighbors_k = k;
            let run = run_cluster(x, Some(labels), &options)?;
            let r = &run.report;
            Ok(SweepRow {
                k,
                acc: r.acc.expect("labels supplied"),
                nmi: r.nmi.expect("labels supplied"),
                ari: r.ari.expect("labels supplied"),
            })
        })
        .collect()
}
