//! External clustering metrics: Hungarian-matched accuracy, NMI, ARI, plus
//! contingency tables and a PCA projection for exporting plots.
//!
//! All metrics treat cluster ids and class ids as opaque names, so every
//! score is invariant to relabeling either argument. Sums run in a canonical
//! order so that invariance (and NMI/ARI symmetry) holds bit for bit.

mod assignment;
mod pca;

pub use assignment::min_cost_assignment;
pub use pca::pca_project;

use crate::error::{Error, Result};
use crate::io::UNLABELED;

/// Counts of points per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// Distinct predicted ids, ascending; row `r` of `counts` is `pred_ids[r]`.
    pub pred_ids: Vec<usize>,
    /// Distinct class ids, ascending; column `c` of `counts` is `true_ids[c]`.
    pub true_ids: Vec<u32>,
    /// Row-major `pred_ids.len() x true_ids.len()`.
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[u32]) -> Result<Self> {
        check_inputs(pred.len(), truth)?;
        let pred_ids = sorted_unique(pred);
        let true_ids = sorted_unique(truth);
        let mut counts = vec![0u64; pred_ids.len() * true_ids.len()];
        for (p, t) in pred.iter().zip(truth) {
            let r = pred_ids.binary_search(p).expect("id collected above");
            let c = true_ids.binary_search(t).expect("id collected above");
            counts[r * true_ids.len() + c] += 1;
        }
        Ok(Self {
            pred_ids,
            true_ids,
            counts,
        })
    }

    #[inline]
    pub fn n_pred(&self) -> usize {
        self.pred_ids.len()
    }

    #[inline]
    pub fn n_true(&self) -> usize {
        self.true_ids.len()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.n_true() + c]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_pred())
            .map(|r| (0..self.n_true()).map(|c| self.get(r, c)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_true())
            .map(|c| (0..self.n_pred()).map(|r| self.get(r, c)).sum())
            .collect()
    }
}

fn sorted_unique<T: Ord + Copy>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn check_inputs(n_pred: usize, truth: &[u32]) -> Result<()> {
    if n_pred != truth.len() {
        return Err(Error::LengthMismatch {
            what: "predictions vs labels",
            left: n_pred,
            right: truth.len(),
        });
    }
    if n_pred == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(index) = truth.iter().position(|&t| t == UNLABELED) {
        return Err(Error::SentinelLabel { index });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccResult {
    pub acc: f64,
    /// Points on the matched diagonal.
    pub matched: u64,
    /// `(predicted cluster, class)` pairs chosen by the optimal matching,
    /// ascending by cluster. Clusters left without a class are absent.
    pub mapping: Vec<(usize, u32)>,
}

/// Accuracy under the best one-to-one cluster-to-class matching.
pub fn hungarian_acc(pred: &[usize], truth: &[u32]) -> Result<AccResult> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(hungarian_acc_from_table(&table))
}

pub fn hungarian_acc_from_table(table: &ContingencyTable) -> AccResult {
    let cost: Vec<i64> = table.counts.iter().map(|&c| -(c as i64)).collect();
    let assignment = min_cost_assignment(&cost, table.n_pred(), table.n_true());
    let mut matched = 0;
    let mut mapping = Vec::new();
    for (r, col) in assignment.iter().enumerate() {
        if let Some(c) = *col {
            matched += table.get(r, c);
            mapping.push((table.pred_ids[r], table.true_ids[c]));
        }
    }
    AccResult {
        acc: matched as f64 / table.total() as f64,
        matched,
        mapping,
    }
}

/// Entropy in nats of a partition given its block sizes.
fn partition_entropy(sizes: &[u64], n: f64) -> f64 {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    -sorted
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Mutual information in nats.
fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    // (cell, smaller marginal, larger marginal) determines a term; sorting the
    // triples fixes the summation order under relabeling and transposition.
    let mut terms: Vec<(u64, u64, u64)> = Vec::new();
    for r in 0..table.n_pred() {
        for c in 0..table.n_true() {
            let nij = table.get(r, c);
            if nij > 0 {
                let (a, b) = (rows[r], cols[c]);
                terms.push((nij, a.min(b), a.max(b)));
            }
        }
    }
    terms.sort_unstable();
    terms
        .iter()
        .map(|&(nij, a, b)| {
            let nij = nij as f64;
            nij / n * (n * nij / (a as f64 * b as f64)).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Normalized mutual information, `I(U;V) / ((H(U) + H(V)) / 2)`.
///
/// When both partitions are a single block the ratio is 0/0; it is defined as
/// 1, since two single-block partitions of the same points are identical.
pub fn nmi(pred: &[usize], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(nmi_from_table(&table))
}

pub fn nmi_from_table(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let hu = partition_entropy(&table.row_sums(), n);
    let hv = partition_entropy(&table.col_sums(), n);
    let denom = hu + hv;
    if denom == 0.0 {
        return 1.0;
    }
    (2.0 * mutual_information(table) / denom).clamp(0.0, 1.0)
}

#[inline]
fn pairs(m: u64) -> u128 {
    let m = u128::from(m);
    m * m.saturating_sub(1) / 2
}

/// Hubert-Arabie adjusted Rand index.
///
/// Pair counts are exact integers. When the expected and maximum index
/// coincide (both partitions all-in-one or all-singletons) the partitions
/// agree and the index is 1.
pub fn ari(pred: &[usize], truth: &[u32]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(ari_from_table(&table))
}

pub fn ari_from_table(table: &ContingencyTable) -> f64 {
    let index: u128 = table.counts.iter().map(|&c| pairs(c)).sum();
    let sum_rows: u128 = table.row_sums().into_iter().map(pairs).sum();
    let sum_cols: u128 = table.col_sums().into_iter().map(pairs).sum();
    let total = pairs(table.total());
    if total == 0 {
        return 1.0;
    }
    let expected = (sum_rows as f64 * sum_cols as f64) / total as f64;
    let max_index = (sum_rows + sum_cols) as f64 / 2.0;
    if max_index == expected {
        return 1.0;
    }
    (index as f64 - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;
    use proptest::prelude::*;

    fn exhaustive_acc(pred: &[usize], truth: &[u32]) -> f64 {
        let clusters = sorted_unique(pred);
        let classes = sorted_unique(truth);
        let size = clusters.len().max(classes.len());
        let mut best = 0usize;
        let mut perm: Vec<usize> = (0..size).collect();
        permute(&mut perm, 0, &mut |p| {
            let hits = pred
                .iter()
                .zip(truth)
                .filter(|(pr, t)| {
                    let ci = clusters.binary_search(pr).unwrap();
                    let target = p[ci];
                    target < classes.len() && classes[target] == **t
                })
                .count();
            best = best.max(hits);
        });
        best as f64 / pred.len() as f64
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    /// NMI straight from its definition over label values.
    fn direct_nmi(a: &[usize], b: &[u32]) -> f64 {
        let n = a.len() as f64;
        let ua = sorted_unique(a);
        let ub = sorted_unique(b);
        let pa: Vec<f64> = ua
            .iter()
            .map(|x| a.iter().filter(|v| *v == x).count() as f64 / n)
            .collect();
        let pb: Vec<f64> = ub
            .iter()
            .map(|x| b.iter().filter(|v| *v == x).count() as f64 / n)
            .collect();
        let mut mi = 0.0;
        for (i, x) in ua.iter().enumerate() {
            for (j, y) in ub.iter().enumerate() {
                let pxy = a.iter().zip(b).filter(|(p, q)| *p == x && *q == y).count() as f64 / n;
                if pxy > 0.0 {
                    mi += pxy * (pxy / (pa[i] * pb[j])).ln();
                }
            }
        }
        let h = |p: &[f64]| -p.iter().map(|v| v * v.ln()).sum::<f64>();
        let denom = h(&pa) + h(&pb);
        if denom == 0.0 {
            1.0
        } else {
            2.0 * mi / denom
        }
    }

    /// ARI from the four pair-agreement counts over all n(n-1)/2 pairs.
    fn pair_enumeration_ari(a: &[usize], b: &[u32]) -> f64 {
        let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => n11 += 1.0,
                    (true, false) => n10 += 1.0,
                    (false, true) => n01 += 1.0,
                    (false, false) => n00 += 1.0,
                }
            }
        }
        let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
        if denom == 0.0 {
            1.0
        } else {
            2.0 * (n00 * n11 - n01 * n10) / denom
        }
    }

    #[test]
    fn identity_and_relabeling_give_full_scores() {
        let truth = [0u32, 0, 1, 1, 2, 2, 2];
        let same: Vec<usize> = truth.iter().map(|&t| t as usize).collect();
        let renamed: Vec<usize> = truth.iter().map(|&t| [7, 3, 11][t as usize]).collect();
        for pred in [&same, &renamed] {
            assert_eq!(hungarian_acc(pred, &truth).unwrap().acc, 1.0);
            assert_eq!(nmi(pred, &truth).unwrap(), 1.0);
            assert_eq!(ari(pred, &truth).unwrap(), 1.0);
        }
    }

    #[test]
    fn constant_prediction_against_balanced_truth() {
        let truth = [0u32, 0, 0, 1, 1, 1];
        let pred = [4usize; 6];
        assert_eq!(nmi(&pred, &truth).unwrap(), 0.0);
        assert_eq!(ari(&pred, &truth).unwrap(), 0.0);
        assert_eq!(hungarian_acc(&pred, &truth).unwrap().acc, 0.5);
    }

    #[test]
    fn single_cluster_convention() {
        assert_eq!(nmi(&[0, 0, 0], &[5, 5, 5]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 0], &[5, 5, 5]).unwrap(), 1.0);
        assert_eq!(ari(&[0], &[1]).unwrap(), 1.0);
    }

    #[test]
    fn six_point_nmi_by_hand() {
        let pred = [0usize, 0, 1, 1, 2, 2];
        let truth = [0u32, 0, 0, 1, 1, 1];
        // H(U) = ln 3, H(V) = ln 2; I = 2/3 ln 2 (the mixed cluster carries no information)
        let want = 2.0 * (2.0 / 3.0 * 2f64.ln()) / (3f64.ln() + 2f64.ln());
        assert!((nmi(&pred, &truth).unwrap() - want).abs() < 1e-12);
        assert!((direct_nmi(&pred, &truth) - want).abs() < 1e-12);
    }

    #[test]
    fn acc_matches_exhaustive_search() {
        let mut rng = Rng::new(8);
        for _ in 0..100 {
            let pred: Vec<usize> = (0..8).map(|_| rng.below(3)).collect();
            let truth: Vec<u32> = (0..8).map(|_| rng.below(3) as u32).collect();
            let got = hungarian_acc(&pred, &truth).unwrap().acc;
            assert_eq!(got, exhaustive_acc(&pred, &truth), "{pred:?} {truth:?}");
        }
    }

    #[test]
    fn mismatched_cluster_counts_are_padded() {
        let pred = [0usize, 0, 1, 1, 2, 2, 3, 3];
        let truth = [0u32, 0, 0, 0, 1, 1, 1, 1];
        let r = hungarian_acc(&pred, &truth).unwrap();
        assert_eq!(r.acc, 0.5);
        assert_eq!(r.mapping.len(), 2);
        let wide = hungarian_acc(&[0, 0, 0, 0], &[0, 1, 2, 3]).unwrap();
        assert_eq!(wide.acc, 0.25);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(hungarian_acc(&[], &[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            nmi(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ari(&[0, 1], &[0, UNLABELED]),
            Err(Error::SentinelLabel { index: 1 })
        ));
    }

    #[test]
    fn contingency_margins() {
        let t = ContingencyTable::new(&[0, 0, 1, 2, 2, 2], &[1, 1, 1, 0, 0, 1]).unwrap();
        assert_eq!(t.total(), 6);
        assert_eq!(t.row_sums(), vec![2, 1, 3]);
        assert_eq!(t.col_sums(), vec![2, 4]);
    }

    fn labeling(max_k: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0..max_k, len)
    }

    proptest! {
        #[test]
        fn scores_match_oracles(seed in any::<u64>(), n in 2usize..50, ka in 1usize..6, kb in 1usize..6) {
            let mut rng = Rng::new(seed);
            let a: Vec<usize> = (0..n).map(|_| rng.below(ka)).collect();
            let b: Vec<u32> = (0..n).map(|_| rng.below(kb) as u32).collect();
            let got_nmi = nmi(&a, &b).unwrap();
            let got_ari = ari(&a, &b).unwrap();
            prop_assert!((got_nmi - direct_nmi(&a, &b).clamp(0.0, 1.0)).abs() < 1e-10);
            prop_assert!((got_ari - pair_enumeration_ari(&a, &b)).abs() < 1e-10);
            let acc = hungarian_acc(&a, &b).unwrap().acc;
            prop_assert!((0.0..=1.0).contains(&acc));
            prop_assert!((0.0..=1.0).contains(&got_nmi));
            prop_assert!((-1.0..=1.0).contains(&got_ari));
        }

        #[test]
        fn relabeling_and_symmetry_are_exact(a in labeling(6, 1..40), perm_seed in any::<u64>()) {
            let mut rng = Rng::new(perm_seed);
            let b: Vec<u32> = a.iter().map(|_| rng.below(4) as u32).collect();
            let mut names: Vec<usize> = (100..106).collect();
            rng.shuffle(&mut names);
            let a2: Vec<usize> = a.iter().map(|&x| names[x]).collect();
            let mut class_names: Vec<u32> = (0..4).map(|c| c * 17 + 3).collect();
            rng.shuffle(&mut class_names);
            let b2: Vec<u32> = b.iter().map(|&x| class_names[x as usize]).collect();

            prop_assert_eq!(hungarian_acc(&a, &b).unwrap().acc, hungarian_acc(&a2, &b2).unwrap().acc);
            prop_assert_eq!(nmi(&a, &b).unwrap(), nmi(&a2, &b2).unwrap());
            prop_assert_eq!(ari(&a, &b).unwrap(), ari(&a2, &b2).unwrap());

            let a_as_u32: Vec<u32> = a.iter().map(|&x| x as u32).collect();
            let b_as_usize: Vec<usize> = b.iter().map(|&x| x as usize).collect();
            prop_assert_eq!(nmi(&a, &b).unwrap(), nmi(&b_as_usize, &a_as_u32).unwrap());
            prop_assert_eq!(ari(&a, &b).unwrap(), ari(&b_as_usize, &a_as_u32).unwrap());
        }
    }
}
