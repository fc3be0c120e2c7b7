//! Neighbor-agreement loss with entropy regularization.
//!
//! For a minibatch `B` with predictions `p_i = softmax(phi x_i)`:
//!
//! ```text
//! L = -1/|B| sum_{i in B} sum_{j in N(i)} P(j|i) ln max(<p_i, p_j>, floor)
//!     - lambda * H( 1/|B| sum_{i in B} p_i )
//! ```
//!
//! Neighbor predictions `p_j` come from the same `phi`, so the gradient flows
//! through both sides of every inner product. Neighbors outside the batch are
//! read from the full embedding matrix.

use rayon::prelude::*;

use super::predict_row;
use crate::affinity::AffinityDistribution;
use crate::error::{Error, Result};
use crate::numeric::{entropy, order_independent_dot, DenseMatrix, EmbeddingMatrix};

/// Lower clamp on `<p_i, p_j>` before the logarithm.
pub const INNER_PRODUCT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// First term: mean weighted negative log agreement.
    pub agreement: f64,
    /// Entropy (nats) of the batch-mean prediction.
    pub entropy: f64,
    /// Gradient of `loss` with respect to `phi`.
    pub grad: DenseMatrix,
}

/// Loss and its exact gradient for the points `batch` of `x`.
pub fn loss_and_grad(
    phi: &DenseMatrix,
    x: &EmbeddingMatrix,
    affinity: &AffinityDistribution,
    batch: &[usize],
    entropy_weight: f64,
) -> Result<LossGrad> {
    let (nc, d) = phi.shape();
    let n = x.rows();
    if x.cols() != d {
        return Err(Error::Shape {
            op: "loss_and_grad",
            left: x.shape(),
            right: phi.shape(),
        });
    }
    if affinity.len() != n {
        return Err(Error::LengthMismatch {
            what: "affinity rows vs embedding rows",
            left: affinity.len(),
            right: n,
        });
    }
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!(
            "batch index {bad} out of range for {n} points"
        )));
    }

    // Every point whose prediction this step touches, in ascending order.
    let mut slot = vec![usize::MAX; n];
    for &i in batch {
        slot[i] = 0;
        for &j in affinity.neighbors(i) {
            slot[j] = 0;
        }
    }
    let involved: Vec<usize> = (0..n).filter(|&i| slot[i] == 0).collect();
    for (s, &i) in involved.iter().enumerate() {
        slot[i] = s;
    }

    let preds: Vec<Vec<f64>> = involved
        .par_iter()
        .map(|&i| predict_row(phi, x.row(i)))
        .collect();

    let m = batch.len() as f64;
    let mut mean_pred = vec![0.0; nc];
    for &i in batch {
        for (q, p) in mean_pred.iter_mut().zip(&preds[slot[i]]) {
            *q += p / m;
        }
    }
    let h = entropy(&mean_pred);
    // d(-lambda H)/dp_i = lambda/m (ln q + 1), identical for every batch point
    let entropy_grad: Vec<f64> = mean_pred
        .iter()
        .map(|&q| entropy_weight / m * (q.max(f64::MIN_POSITIVE).ln() + 1.0))
        .collect();

    // Per batch point: its agreement loss, dL/dp_i, and the coefficient that
    // scales p_i into dL/dp_j for each neighbor j.
    struct PointTerms {
        loss: f64,
        grad_self: Vec<f64>,
        neighbor_coefs: Vec<f64>,
    }
    let terms: Vec<PointTerms> = batch
        .par_iter()
        .map(|&i| {
            let pi = &preds[slot[i]];
            let mut loss = 0.0;
            let mut grad_self = entropy_grad.clone();
            let mut neighbor_coefs = Vec::with_capacity(affinity.k());
            for (&j, &w) in affinity.neighbors(i).iter().zip(affinity.weights(i)) {
                let pj = &preds[slot[j]];
                let s = order_independent_dot(pi, pj);
                if s > INNER_PRODUCT_FLOOR {
                    loss -= w * s.ln() / m;
                    let coef = -w / (m * s);
                    grad_self
                        .iter_mut()
                        .zip(pj)
                        .for_each(|(g, p)| *g += coef * p);
                    neighbor_coefs.push(coef);
                } else {
                    loss -= w * INNER_PRODUCT_FLOOR.ln() / m;
                    neighbor_coefs.push(0.0);
                }
            }
            PointTerms {
                loss,
                grad_self,
                neighbor_coefs,
            }
        })
        .collect();

    // Fixed-order merge of dL/dp over involved points.
    let mut grad_p = vec![vec![0.0; nc]; involved.len()];
    let mut agreement = 0.0;
    for (&i, t) in batch.iter().zip(&terms) {
        agreement += t.loss;
        let si = slot[i];
        grad_p[si]
            .iter_mut()
            .zip(&t.grad_self)
            .for_each(|(g, v)| *g += v);
        let pi = &preds[si];
        for (&j, &coef) in affinity.neighbors(i).iter().zip(&t.neighbor_coefs) {
            if coef != 0.0 {
                grad_p[slot[j]]
                    .iter_mut()
                    .zip(pi)
                    .for_each(|(g, p)| *g += coef * p);
            }
        }
    }

    // Through the softmax: dL/dz_c = p_c (g_c - <g, p>).
    let grad_z: Vec<Vec<f64>> = grad_p
        .par_iter()
        .zip(preds.par_iter())
        .map(|(g, p)| {
            let gp = order_independent_dot(g, p);
            p.iter().zip(g).map(|(pc, gc)| pc * (gc - gp)).collect()
        })
        .collect();

    // dL/dphi_c = sum_points dL/dz_c * x_point, accumulated in point order.
    let rows: Vec<Vec<f64>> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let mut row = vec![0.0; d];
            for (s, &i) in involved.iter().enumerate() {
                let gz = grad_z[s][c];
                if gz != 0.0 {
                    row.iter_mut()
                        .zip(x.row(i))
                        .for_each(|(r, xv)| *r += gz * xv);
                }
            }
            row
        })
        .collect();
    let grad = DenseMatrix::from_vec(nc, d, rows.concat())?;

    Ok(LossGrad {
        loss: agreement - entropy_weight * h,
        agreement,
        entropy: h,
        grad,
    })
}
