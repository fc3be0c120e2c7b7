use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, EmbeddingMatrix};

/// Projects centered rows onto the top `out_dim` principal directions.
///
/// Each direction's sign is fixed so its largest-magnitude component is
/// positive, which keeps exports stable across runs.
pub fn pca_project(x: &EmbeddingMatrix, out_dim: usize) -> Result<DenseMatrix> {
    let (n, d) = x.shape();
    if out_dim == 0 || out_dim > n.min(d) {
        return Err(Error::invalid(format!(
            "out_dim must be in 1..={}, got {out_dim}",
            n.min(d)
        )));
    }

    let mut mean = vec![0.0; d];
    for row in x.row_iter() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);

    let cov = centered.transpose() * &centered / n as f64;
    if cov.trace() <= 0.0 {
        return Err(Error::Degenerate("data has zero variance".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut out = DenseMatrix::zeros(n, out_dim);
    for (k, &idx) in order.iter().take(out_dim).enumerate() {
        let mut dir = eig.eigenvectors.column(idx).into_owned();
        let pivot = dir
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            dir.neg_mut();
        }
        let proj = &centered * dir;
        for i in 0..n {
            out.set(i, k, proj[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{squared_euclidean, Rng};

    #[test]
    fn two_d_projection_preserves_distances() {
        let mut rng = Rng::new(6);
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|_| [3.0 * rng.normal(), rng.normal() + 2.0])
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let p = pca_project(&x, 2).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let a = squared_euclidean(x.row(i), x.row(j));
                let b = squared_euclidean(p.row(i), p.row(j));
                assert!((a - b).abs() < 1e-9 * (1.0 + a), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn first_component_follows_dominant_axis() {
        let mut rng = Rng::new(7);
        let rows: Vec<[f64; 3]> = (0..200)
            .map(|_| [0.1 * rng.normal(), 10.0 * rng.normal(), 0.1 * rng.normal()])
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let p = pca_project(&x, 1).unwrap();
        let mean_y = rows.iter().map(|r| r[1]).sum::<f64>() / 200.0;
        for (i, r) in rows.iter().enumerate() {
            assert!((p.get(i, 0).abs() - (r[1] - mean_y).abs()).abs() < 0.5);
        }
    }

    #[test]
    fn rejects_degenerate_and_bad_dims() {
        let flat = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(pca_project(&flat, 1), Err(Error::Degenerate(_))));
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap();
        assert!(pca_project(&x, 3).is_err());
        assert!(pca_project(&x, 0).is_err());
    }
}
