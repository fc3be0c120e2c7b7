//! Dense row-major matrices, the seeded generator, and small vector helpers
//! shared by the rest of the crate.

use std::fmt;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `rows x cols` matrix of `f64`.
///
/// Every public constructor rejects non-finite entries, and every public
/// operation preserves finiteness on finite input.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// The `n x d` matrix of latent vectors that the clustering head consumes.
pub type EmbeddingMatrix = DenseMatrix;

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape {
                    op: "from_rows",
                    left: (i, r.len()),
                    right: (0, cols),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero width
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter().take(8) {
            writeln!(f, "  {r:?}")?;
        }
        if self.rows > 8 {
            writeln!(f, "  ... {} more rows", self.rows - 8)?;
        }
        write!(f, "]")
    }
}

/// Standard matrix product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `a * b^T`, the shape used for scoring embeddings against head rows.
pub fn matmul_transposed(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::Shape {
            op: "matmul_transposed",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let ai = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(ai, b.row(j));
        }
    }
    Ok(out)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Softmax of a single finite vector, in place. The normalizer is an
/// order-independent sum, so permuting the input permutes the output exactly.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in v.iter_mut() {
        *x = (*x - max).exp();
    }
    let sum = order_independent_sum(v.iter().copied());
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Sum whose result does not depend on the order of the terms: they are
/// sorted before accumulation.
pub fn order_independent_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut t: Vec<f64> = terms.into_iter().collect();
    t.sort_unstable_by(f64::total_cmp);
    t.iter().sum()
}

/// Inner product invariant (bit for bit) under a common permutation of both
/// arguments.
pub fn order_independent_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    order_independent_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Shannon entropy in nats, with `0 ln 0 = 0`; invariant to reordering `p`.
pub fn entropy(p: &[f64]) -> f64 {
    -order_independent_sum(p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()))
}

/// Deterministic xoshiro256++ generator seeded through SplitMix64.
///
/// Equal seeds produce identical streams on every platform. Parallel code
/// should call [`Rng::split`] rather than share one generator.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for the given stream id; does not advance `self`.
    pub fn split(&self, stream: u64) -> Rng {
        Rng::new(splitmix64(
            self.seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)),
        ))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "Rng::below called with n = 0");
        self.inner.random_range(0..n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::Rng;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| rng.normal()).collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
        let mut out = vec![0.0; a.rows() * b.cols()];
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out[i * b.cols() + j] = s;
            }
        }
        out
    }

    #[test]
    fn identity_times_matrix() {
        let m = DenseMatrix::from_rows(&[[1.5, -2.0, 3.0], [0.25, 4.0, -1.0]]).unwrap();
        assert_eq!(matmul(&DenseMatrix::identity(2), &m).unwrap(), m);
    }

    #[test]
    fn small_product_by_hand() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[5.0], [6.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = Rng::new(11);
        let a = random_matrix(&mut rng, 8, 8);
        let b = random_matrix(&mut rng, 8, 8);
        let c = matmul(&a, &b).unwrap();
        for (got, want) in c.as_slice().iter().zip(naive_matmul(&a, &b)) {
            assert_relative_eq!(*got, want, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
        assert!(matches!(
            err,
            Error::Shape {
                left: (2, 3),
                right: (2, 3),
                ..
            }
        ));
    }

    #[test]
    fn transposed_product_agrees_with_explicit_transpose() {
        let mut rng = Rng::new(3);
        let a = random_matrix(&mut rng, 5, 4);
        let b = random_matrix(&mut rng, 6, 4);
        let direct = matmul(&a, &b.transpose()).unwrap();
        let fused = matmul_transposed(&a, &b).unwrap();
        for (x, y) in direct.as_slice().iter().zip(fused.as_slice()) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let err = DenseMatrix::from_vec(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(DenseMatrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let s = softmax_rows(&DenseMatrix::zeros(1, 3));
        for &v in s.row(0) {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let s = softmax_rows(&DenseMatrix::from_rows(&[[1000.0, 0.0]]).unwrap());
        assert!(s.is_finite());
        assert_relative_eq!(s.get(0, 0), 1.0, epsilon = 1e-15);
        assert!(s.get(0, 1) < 1e-300);
    }

    #[test]
    fn softmax_matches_direct_formula() {
        let s = softmax_rows(&DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap());
        let denom = 1f64.exp() + 2f64.exp() + 3f64.exp();
        for (k, &v) in s.row(0).iter().enumerate() {
            assert_relative_eq!(v, ((k + 1) as f64).exp() / denom, max_relative = 1e-12);
        }
    }

    #[test]
    fn rng_streams_reproducible() {
        let mut a = Rng::new(0xDEADBEEF);
        let mut b = Rng::new(0xDEADBEEF);
        for _ in 0..100_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Rng::new(1);
        let mut d = Rng::new(2);
        assert_ne!(c.next_u64(), d.next_u64());
    }

    #[test]
    fn split_streams_differ_and_are_stable() {
        let root = Rng::new(5);
        let mut s1 = root.split(1);
        let mut s1b = root.split(1);
        let mut s2 = root.split(2);
        let x = s1.next_u64();
        assert_eq!(x, s1b.next_u64());
        assert_ne!(x, s2.next_u64());
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut rng = Rng::new(9);
        let mut v: Vec<usize> = (0..100).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }

    #[test]
    fn softmax_permutes_exactly() {
        let mut a = vec![0.3, -1.7, 2.2, 0.9, 1e-3];
        let mut b = vec![a[3], a[0], a[4], a[2], a[1]];
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        assert_eq!(b, vec![a[3], a[0], a[4], a[2], a[1]]);
    }

    #[test]
    fn entropy_of_uniform_is_log_n() {
        assert_relative_eq!(entropy(&[0.25; 4]), 4f64.ln(), epsilon = 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), n in 1usize..5, m in 1usize..5, p in 1usize..5, q in 1usize..5) {
            let mut rng = Rng::new(seed);
            let a = random_matrix(&mut rng, n, m);
            let b = random_matrix(&mut rng, m, p);
            let c = random_matrix(&mut rng, p, q);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = 1.0 + left.norm();
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn softmax_rows_sum_to_one(row in prop::collection::vec(-1e4f64..1e4, 1..12)) {
            let m = DenseMatrix::from_vec(1, row.len(), row).unwrap();
            let s = softmax_rows(&m);
            prop_assert!(s.as_slice().iter().all(|v| *v >= 0.0 && v.is_finite()));
            let total: f64 = s.row(0).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
