use tsp_core::io::{
    read_assignments, read_csv_embeddings, read_embeddings, read_labels, write_assignments,
    write_csv_matrix, write_embeddings, write_labels, write_report,
};
use tsp_core::kmeans::KMeansConfig;
use tsp_core::pipeline::{evaluate, run_kmeans_baseline};
use tsp_core::synth::generate;
use tsp_core::{BlobSpec, UNLABELED};

#[test]
fn synthetic_files_round_trip_through_a_baseline_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let (x, mut y) = generate(&BlobSpec::isotropic(4, 50, 8, 3)).unwrap();
    // f32 storage: compare after one pass through the format
    write_embeddings(p.join("x.tspe"), &x).unwrap();
    let x = read_embeddings(p.join("x.tspe")).unwrap();
    y[7] = UNLABELED;
    write_labels(p.join("y.tspl"), &y).unwrap();

    let x2 = read_embeddings(p.join("x.tspe")).unwrap();
    let y2 = read_labels(p.join("y.tspl")).unwrap();
    assert_eq!(x, x2);
    assert_eq!(y, y2);

    write_csv_matrix(p.join("x.csv"), &x2, Some(&y2)).unwrap();
    let (x3, y3) = read_csv_embeddings(p.join("x.csv"), true).unwrap();
    assert_eq!(x3, x2);
    assert_eq!(y3.unwrap(), y2);

    let run = run_kmeans_baseline(&x2, Some(&y2), &KMeansConfig::new(4), 1).unwrap();
    assert_eq!(run.report.acc, Some(1.0));
    assert_eq!(run.report.n_evaluated, 199);
    write_assignments(p.join("a.txt"), &run.assignments).unwrap();
    let back = read_assignments(p.join("a.txt")).unwrap();
    assert_eq!(back, run.assignments);

    let again = evaluate(&back, Some(&y2), 4).unwrap();
    assert_eq!(again.confusion, run.report.confusion);
    write_report(p.join("r.json"), &again).unwrap();
    let text = std::fs::read_to_string(p.join("r.json")).unwrap();
    assert!(text.contains("\"nmi_normalization\": \"arithmetic\""));
}
