use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of per-point neighbor label consistency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub k: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

/// Result of a clustering run or an evaluation.
///
/// Metric fields are `null` when no ground truth was supplied. `confusion`
/// is indexed `[true class][predicted cluster]`, with class ids listed in
/// `class_ids` and clusters `0..cluster_sizes.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub nmi_normalization: String,
    pub n_points: usize,
    pub n_evaluated: usize,
    pub cluster_sizes: Vec<usize>,
    pub class_ids: Option<Vec<u32>>,
    pub confusion: Option<Vec<Vec<u64>>>,
    /// Predicted cluster -> matched class id under the optimal assignment.
    pub cluster_to_class: Option<Vec<Option<u32>>>,
    pub neighbor_consistency: Option<ConsistencySummary>,
    pub loss_history: Option<Vec<f64>>,
    pub config: BTreeMap<String, serde_json::Value>,
}

impl EvalReport {
    pub fn unlabeled(n_points: usize, cluster_sizes: Vec<usize>) -> Self {
        Self {
            acc: None,
            nmi: None,
            ari: None,
            nmi_normalization: "arithmetic".into(),
            n_points,
            n_evaluated: 0,
            cluster_sizes,
            class_ids: None,
            confusion: None,
            cluster_to_class: None,
            neighbor_consistency: None,
            loss_history: None,
            config: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn write_report(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let path = path.as_ref();
    let mut text = report.to_json()?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_stable_and_all_present() {
        let mut report = EvalReport::unlabeled(4, vec![2, 2]);
        report.config.insert("seed".into(), 7.into());
        report.config.insert("epochs".into(), 100.into());
        let json = report.to_json().unwrap();
        let keys = [
            "\"acc\"",
            "\"nmi\"",
            "\"ari\"",
            "\"nmi_normalization\"",
            "\"n_points\"",
            "\"n_evaluated\"",
            "\"cluster_sizes\"",
            "\"class_ids\"",
            "\"confusion\"",
            "\"cluster_to_class\"",
            "\"neighbor_consistency\"",
            "\"loss_history\"",
            "\"config\"",
        ];
        let mut last = 0;
        for key in keys {
            let at = json.find(key).unwrap_or_else(|| panic!("{key} missing"));
            assert!(at >= last, "{key} out of order");
            last = at;
        }
        // config is a sorted map
        assert!(json.find("\"epochs\"").unwrap() < json.find("\"seed\"").unwrap());
        assert_eq!(json, report.to_json().unwrap());
    }

    #[test]
    fn report_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut report = EvalReport::unlabeled(3, vec![1, 2]);
        report.acc = Some(0.5);
        report.confusion = Some(vec![vec![1, 0], vec![0, 2]]);
        write_report(&path, &report).unwrap();
        let back: EvalReport = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
