use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tsp_core::io::{
    read_assignments, read_csv_embeddings, read_embeddings, read_labels, write_assignments,
    write_csv_matrix, write_embeddings, write_labels, write_report,
};
use tsp_core::kmeans::KMeansConfig;
use tsp_core::metrics::pca_project;
use tsp_core::pipeline::{
    evaluate, knn_diagnostic, run_cluster, run_kmeans_baseline, sweep_k, ClusterOptions,
    DEFAULT_SWEEP_KS,
};
use tsp_core::synth::generate;
use tsp_core::{BlobShape, BlobSpec, EmbeddingMatrix, EvalReport, HeadInit, Metric, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tsp",
    version,
    about = "Cluster frozen embeddings with a trained linear head"
)]
struct Cli {
    /// Worker threads; 1 is the reproducibility reference.
    #[arg(long, global = true, env = "TSP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a clustering head and assign every point.
    Cluster(ClusterArgs),
    /// K-means directly on the embeddings.
    Kmeans(KmeansArgs),
    /// Share of each point's nearest neighbors carrying its own label.
    KnnDiag(KnnDiagArgs),
    /// Write synthetic embeddings and labels with known clusters.
    Synth(SynthArgs),
    /// Score an assignments file against labels.
    Eval(EvalArgs),
    /// PCA projection to CSV for plotting.
    Project(ProjectArgs),
    /// Run `cluster` once per neighbor count.
    SweepK(SweepArgs),
}

#[derive(Debug, Args)]
struct Input {
    /// Embeddings: TSPE binary, or CSV when the name ends in `.csv`.
    #[arg(long)]
    embeddings: PathBuf,
    /// Labels (TSPL binary).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Treat the last CSV column as labels.
    #[arg(long)]
    label_column: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 20)]
    neighbors: usize,
    #[arg(long, default_value_t = 3.0)]
    entropy_weight: f64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, default_value = "kmeans")]
    init: HeadInit,
}

impl TrainArgs {
    fn options(&self) -> ClusterOptions {
        ClusterOptions {
            train: TrainConfig {
                neighbors_k: self.neighbors,
                entropy_weight: self.entropy_weight,
                learning_rate: self.lr,
                batch_size: self.batch_size,
                epochs: self.epochs,
                seed: self.seed,
                init: self.init,
                ..TrainConfig::new(self.clusters)
            },
            metric: self.metric,
        }
    }
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    assignments_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KmeansArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    assignments_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KnnDiagArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 20)]
    neighbors: usize,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    /// Per-point consistency values, one per line.
    #[arg(long)]
    values_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 200)]
    points_per_cluster: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    within_std: f64,
    #[arg(long, default_value = "isotropic")]
    shape: BlobShape,
    #[arg(long, default_value_t = 1.0)]
    imbalance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TSPE output, or CSV with a label column when the name ends in `.csv`.
    #[arg(long)]
    embeddings_out: PathBuf,
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    assignments: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Number of clusters; defaults to the largest assignment plus one.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    train: TrainArgs,
    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_KS)]
    ks: Vec<usize>,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// The error chain joined by `: `, skipping causes whose text the message
/// already carries.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if text.contains(&part) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&part);
    }
    text
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Kmeans(args) => cmd_kmeans(args),
        Command::KnnDiag(args) => cmd_knn_diag(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Project(args) => cmd_project(args),
        Command::SweepK(args) => cmd_sweep_k(args),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load(input: &Input) -> Result<(EmbeddingMatrix, Option<Vec<u32>>)> {
    let path = &input.embeddings;
    let (x, mut labels) = if is_csv(path) {
        read_csv_embeddings(path, input.label_column)?
    } else {
        if input.label_column {
            bail!("--label-column only applies to CSV input");
        }
        (read_embeddings(path)?, None)
    };
    if let Some(lp) = &input.labels {
        if labels.is_some() {
            bail!("labels given both as a CSV column and as --labels");
        }
        labels = Some(read_labels(lp)?);
    }
    Ok((x, labels))
}

fn echo_inputs(report: &mut EvalReport, command: &str, input: &Input) {
    let c = &mut report.config;
    c.insert("command".into(), json!(command));
    c.insert(
        "embeddings".into(),
        json!(input.embeddings.display().to_string()),
    );
    c.insert(
        "labels".into(),
        json!(input.labels.as_ref().map(|p| p.display().to_string())),
    );
    c.insert("label_column".into(), json!(input.label_column));
}

fn print_scores(report: &EvalReport) {
    match (report.acc, report.nmi, report.ari) {
        (Some(acc), Some(nmi), Some(ari)) => println!(
            "acc {acc:.4}  nmi {nmi:.4}  ari {ari:.4}  ({} of {} points labeled)",
            report.n_evaluated, report.n_points
        ),
        _ => println!(
            "{} points, cluster sizes {:?}",
            report.n_points, report.cluster_sizes
        ),
    }
}

fn finish(
    report: &EvalReport,
    assignments: &[usize],
    assignments_out: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<()> {
    if let Some(path) = assignments_out {
        write_assignments(path, assignments)?;
    }
    if let Some(path) = report_out {
        write_report(path, report)?;
    }
    print_scores(report);
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let (x, labels) = load(&args.input)?;
    let run = run_cluster(&x, labels.as_deref(), &args.train.options())?;
    let mut report = run.report;
    echo_inputs(&mut report, "cluster", &args.input);
    finish(
        &report,
        &run.assignments,
        args.assignments_out.as_deref(),
        args.report_out.as_deref(),
    )
}

fn cmd_kmeans(args: KmeansArgs) -> Result<()> {
    let (x, labels) = load(&args.input)?;
    let config = KMeansConfig {
        n_clusters: args.clusters,
        max_iter: args.max_iter,
        tol: args.tol,
        n_init: args.restarts,
    };
    let run = run_kmeans_baseline(&x, labels.as_deref(), &config, args.seed)?;
    let mut report = run.report;
    echo_inputs(&mut report, "kmeans", &args.input);
    finish(
        &report,
        &run.assignments,
        args.assignments_out.as_deref(),
        args.report_out.as_deref(),
    )
}

fn cmd_knn_diag(args: KnnDiagArgs) -> Result<()> {
    let (x, labels) = load(&args.input)?;
    let Some(labels) = labels else {
        bail!("knn-diag needs labels");
    };
    let (consistency, summary) = knn_diagnostic(&x, &labels, args.neighbors, args.metric)?;
    if let Some(path) = &args.values_out {
        tsp_core::io::write_values(path, &consistency.per_point)?;
    }
    let body = json!({
        "metric": args.metric.as_str(),
        "summary": summary,
        "embeddings": args.input.embeddings.display().to_string(),
    });
    if let Some(path) = &args.report_out {
        let text = serde_json::to_string_pretty(&body)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "k {}  mean {:.4}  median {:.4}  min {:.4}  max {:.4}",
        summary.k, summary.mean, summary.median, summary.min, summary.max
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = BlobSpec {
        n_clusters: args.clusters,
        points_per_cluster: args.points_per_cluster,
        dim: args.dim,
        center_separation: args.separation,
        within_std: args.within_std,
        shape: args.shape,
        seed: args.seed,
        imbalance: args.imbalance,
    };
    let (x, y) = generate(&spec)?;
    if is_csv(&args.embeddings_out) {
        write_csv_matrix(&args.embeddings_out, &x, Some(&y))?;
    } else {
        write_embeddings(&args.embeddings_out, &x)?;
    }
    if let Some(path) = &args.labels_out {
        write_labels(path, &y)?;
    }
    println!("{} points x {} dims", x.rows(), x.cols());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let assignments = read_assignments(&args.assignments)?;
    let labels = read_labels(&args.labels)?;
    let mut report = evaluate(&assignments, Some(&labels), args.clusters.unwrap_or(0))?;
    report.config.insert("command".into(), json!("eval"));
    report.config.insert(
        "assignments".into(),
        json!(args.assignments.display().to_string()),
    );
    report
        .config
        .insert("labels".into(), json!(args.labels.display().to_string()));
    finish(&report, &assignments, None, args.report_out.as_deref())
}

fn cmd_project(args: ProjectArgs) -> Result<()> {
    let (x, labels) = load(&args.input)?;
    let projected = pca_project(&x, args.dim)?;
    write_csv_matrix(&args.out, &projected, labels.as_deref())?;
    println!(
        "{} points projected to {} dims",
        projected.rows(),
        projected.cols()
    );
    Ok(())
}

fn cmd_sweep_k(args: SweepArgs) -> Result<()> {
    let (x, labels) = load(&args.input)?;
    let Some(labels) = labels else {
        bail!("sweep-k needs labels");
    };
    let options = args.train.options();
    let rows = sweep_k(&x, &labels, &options, &args.ks)?;
    println!("{:>4}  {:>7}  {:>7}  {:>7}", "k", "acc", "nmi", "ari");
    for r in &rows {
        println!("{:>4}  {:>7.4}  {:>7.4}  {:>7.4}", r.k, r.acc, r.nmi, r.ari);
    }
    if let Some(path) = &args.report_out {
        let body = json!({ "config": options.echo(), "rows": rows });
        let text = serde_json::to_string_pretty(&body)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
