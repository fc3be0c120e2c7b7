//! Synthetic latent spaces with known ground truth.

use std::f64::consts::TAU;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, DenseMatrix, EmbeddingMatrix, Rng};

/// Stretch factor applied along each cluster's principal axis for
/// [`BlobShape::Anisotropic`].
pub const ANISOTROPIC_STRETCH: f64 = 4.0;

/// Fraction of the circle covered by arcs in [`BlobShape::Ring`]; the rest is
/// split evenly into gaps between consecutive arcs.
pub const RING_COVERAGE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobShape {
    /// Spherical Gaussian around each center.
    Isotropic,
    /// Gaussian stretched along a random per-cluster axis.
    Anisotropic,
    /// Arcs of unequal angular length laid end to end around one circle of
    /// radius `center_separation` centered at the origin. Arc `c` spans an
    /// angle proportional to `c + 1`; every arc holds the same number of
    /// points, so shorter arcs are denser. Gaussian noise of `within_std` is
    /// added in every dimension.
    Ring,
}

impl FromStr for BlobShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" => Ok(Self::Isotropic),
            "anisotropic" => Ok(Self::Anisotropic),
            "ring" => Ok(Self::Ring),
            other => Err(Error::invalid(format!("unknown shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub center_separation: f64,
    pub within_std: f64,
    pub shape: BlobShape,
    pub seed: u64,
    /// Ratio between the largest and smallest cluster. `1.0` is balanced;
    /// larger values shrink cluster `c` geometrically toward
    /// `points_per_cluster / imbalance`.
    pub imbalance: f64,
}

impl BlobSpec {
    pub fn isotropic(n_clusters: usize, points_per_cluster: usize, dim: usize, seed: u64) -> Self {
        Self {
            n_clusters,
            points_per_cluster,
            dim,
            center_separation: 10.0,
            within_std: 1.0,
            shape: BlobShape::Isotropic,
            seed,
            imbalance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters < 2 {
            return Err(Error::invalid("n_clusters must be at least 2"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim must be at least 2"));
        }
        if self.points_per_cluster == 0 {
            return Err(Error::invalid("points_per_cluster must be positive"));
        }
        if !(self.within_std > 0.0 && self.within_std.is_finite()) {
            return Err(Error::invalid("within_std must be positive"));
        }
        if !(self.center_separation >= 0.0 && self.center_separation.is_finite()) {
            return Err(Error::invalid("center_separation must be nonnegative"));
        }
        if !(self.imbalance >= 1.0 && self.imbalance.is_finite()) {
            return Err(Error::invalid("imbalance must be >= 1"));
        }
        Ok(())
    }

    /// Number of points drawn for each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let last = (self.n_clusters - 1) as f64;
        (0..self.n_clusters)
            .map(|c| {
                let shrink = self.imbalance.powf(-(c as f64) / last);
                ((self.points_per_cluster as f64 * shrink).round() as usize).max(1)
            })
            .collect()
    }

    /// Cluster centers for the Gaussian shapes. With `n_clusters <= dim` they
    /// lie on random orthonormal axes at radius `separation / sqrt(2)`, so
    /// every pair is exactly `center_separation` apart.
    pub fn centers(&self) -> Result<DenseMatrix> {
        self.validate()?;
        let mut rng = Rng::new(self.seed).split(0);
        Ok(self.centers_with(&mut rng))
    }

    fn centers_with(&self, rng: &mut Rng) -> DenseMatrix {
        let radius = self.center_separation / 2f64.sqrt();
        let axes = random_directions(rng, self.n_clusters, self.dim);
        axes.scale(radius)
    }
}

/// Draws `spec`'s dataset. Points are emitted cluster by cluster; labels are
/// `0..n_clusters`.
pub fn generate(spec: &BlobSpec) -> Result<(EmbeddingMatrix, Vec<u32>)> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let mut geometry_rng = root.split(0);
    let mut noise_rng = root.split(1);

    let sizes = spec.cluster_sizes();
    let n: usize = sizes.iter().sum();
    let d = spec.dim;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);

    match spec.shape {
        BlobShape::Isotropic | BlobShape::Anisotropic => {
            let centers = spec.centers_with(&mut geometry_rng);
            let axes = random_directions(&mut geometry_rng, spec.n_clusters, d);
            let stretch = if spec.shape == BlobShape::Anisotropic {
                ANISOTROPIC_STRETCH
            } else {
                1.0
            };
            let mut z = vec![0.0; d];
            for (c, &size) in sizes.iter().enumerate() {
                let axis = axes.row(c);
                for _ in 0..size {
                    z.iter_mut().for_each(|v| *v = noise_rng.normal());
                    let along = dot(&z, axis) * (stretch - 1.0);
                    for j in 0..d {
                        let noise = spec.within_std * (z[j] + along * axis[j]);
                        data.push(centers.get(c, j) + noise);
                    }
                    labels.push(c as u32);
                }
            }
        }
        BlobShape::Ring => {
            let plane = random_directions(&mut geometry_rng, 2, d);
            let arcs = ring_arcs(spec.n_clusters);
            for (c, &size) in sizes.iter().enumerate() {
                let (start, width) = arcs[c];
                for _ in 0..size {
                    let theta = start + width * noise_rng.uniform();
                    let (s, co) = theta.sin_cos();
                    for j in 0..d {
                        let on_circle =
                            spec.center_separation * (co * plane.get(0, j) + s * plane.get(1, j));
                        data.push(on_circle + spec.within_std * noise_rng.normal());
                    }
                    labels.push(c as u32);
                }
            }
        }
    }

    Ok((DenseMatrix::from_vec(n, d, data)?, labels))
}

/// `(start angle, angular width)` of each ring arc.
pub fn ring_arcs(n_clusters: usize) -> Vec<(f64, f64)> {
    let weight_total = (n_clusters * (n_clusters + 1) / 2) as f64;
    let gap = TAU * (1.0 - RING_COVERAGE) / n_clusters as f64;
    let mut start = 0.0;
    (0..n_clusters)
        .map(|c| {
            let width = TAU * RING_COVERAGE * (c + 1) as f64 / weight_total;
            let arc = (start, width);
            start += width + gap;
            arc
        })
        .collect()
}

/// `count` unit vectors in `dim` dimensions: orthonormal when `count <= dim`,
/// independent uniform directions otherwise.
fn random_directions(rng: &mut Rng, count: usize, dim: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(count, dim);
    for i in 0..count {
        loop {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            if i < dim {
                for k in 0..i {
                    let prev = out.row(k);
                    let proj = dot(&v, prev);
                    v.iter_mut().zip(prev).for_each(|(a, b)| *a -= proj * b);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 {
                out.row_mut(i)
                    .iter_mut()
                    .zip(&v)
                    .for_each(|(o, x)| *o = x / norm);
                break;
            }
        }
    }
    out
}
