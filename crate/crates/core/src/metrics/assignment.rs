//! Kuhn-Munkres (Hungarian) algorithm for rectangular integer cost matrices,
//! shortest-augmenting-path form with row/column potentials, O(n^2 m).

/// Minimum-cost assignment of rows to columns.
///
/// `cost` is row-major `rows x cols`. Returns, for each row, the column it is
/// assigned to; when `rows > cols` the surplus rows get `None`. Missing cells
/// of the implied square matrix count as zero cost.
pub fn min_cost_assignment(cost: &[i64], rows: usize, cols: usize) -> Vec<Option<usize>> {
    assert_eq!(cost.len(), rows * cols, "cost matrix has wrong length");
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            cost[i * cols + j]
        } else {
            0
        }
    };

    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}
