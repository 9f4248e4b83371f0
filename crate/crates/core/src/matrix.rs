//! Dense row-major matrices of 64-bit reals.
//!
//! Deliberately desk-scale: states are a few thousand entries, spectral
//! objects at most a few hundred on a side, so plain `Vec<f64>` storage and
//! textbook loops are the right tool.

use thiserror::Error;

/// Errors raised by the dense linear algebra layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    /// Requested shape would overflow the allocator or `usize` arithmetic.
    #[error("allocation of a {rows} x {cols} matrix is too large")]
    AllocationTooLarge { rows: usize, cols: usize },
    /// Dominant and sub-dominant eigenvalues have (numerically) equal
    /// magnitude, so the iterate direction cannot settle.
    #[error("non-dominant spectrum: |lambda1| is not separated from |lambda2| ({detail})")]
    NonDominantSpectrum { detail: String },
    /// The iterate collapsed to numerical zero (no component along the
    /// dominant eigenvector).
    #[error("iterate collapsed to numerical zero after {iterations} iterations")]
    ZeroComponent { iterations: usize },
    /// The QR eigenvalue loop did not deflate every eigenvalue in budget.
    #[error("eigenvalue iteration did not converge within {max_iters} iterations")]
    NoConvergence { max_iters: usize },
    /// An eigenpair failed its construction-time residual check.
    #[error("eigenpair residual {residual:e} exceeds bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
}

/// Dense 2-D array of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a row-major entry slice. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count {} does not match {}x{}",
            entries.len(),
            rows,
            cols
        );
        Self {
            rows,
            cols,
            entries: entries.to_vec(),
        }
    }

    /// Build entry-wise from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Square matrix with the given diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column_vector(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            entries: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "inner dimensions {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(lhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e *= factor;
        }
        out
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (o, &b) in out.entries.iter_mut().zip(&rhs.entries) {
            *o += b;
        }
        out
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (o, &b) in out.entries.iter_mut().zip(&rhs.entries) {
            *o -= b;
        }
        out
    }

    /// Copy of row `i` as a plain vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    /// Copy of column `j` as a plain vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Frobenius norm: sqrt of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Entry with the largest absolute value (0.0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    /// Frobenius inner product `<self, rhs>`.
    pub fn dot(&self, rhs: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Kronecker product `self (x) rhs`: block (i, j) equals
    /// `self[i,j] * rhs`.
    pub fn kron(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let rows = self
            .rows
            .checked_mul(rhs.rows)
            .filter(|&r| r <= MAX_KRON_SIDE)
            .ok_or(LinalgError::AllocationTooLarge {
                rows: self.rows,
                cols: rhs.rows,
            })?;
        let cols = self
            .cols
            .checked_mul(rhs.cols)
            .filter(|&c| c <= MAX_KRON_SIDE)
            .ok_or(LinalgError::AllocationTooLarge {
                rows: self.cols,
                cols: rhs.cols,
            })?;
        rows.checked_mul(cols)
            .ok_or(LinalgError::AllocationTooLarge { rows, cols })?;
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for p in 0..rhs.rows {
                    for q in 0..rhs.cols {
                        out[(i * rhs.rows + p, j * rhs.cols + q)] = a * rhs[(p, q)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Stack the columns into a single column vector: entry `k*rows + i`
    /// of the result is `self[i, k]`.
    pub fn vectorize(&self) -> DenseMatrix {
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for k in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self[(i, k)]);
            }
        }
        DenseMatrix {
            rows: self.rows * self.cols,
            cols: 1,
            entries,
        }
    }

    /// Inverse of `vectorize` for a column vector of length `rows * cols`.
    pub fn from_vectorized(vec: &DenseMatrix, rows: usize, cols: usize) -> DenseMatrix {
        assert_eq!(vec.cols, 1, "expected a column vector");
        assert_eq!(vec.rows, rows * cols);
        DenseMatrix::from_fn(rows, cols, |i, k| vec[(k * rows + i, 0)])
    }
}

/// Hard cap on one side of a Kronecker product; well past anything this
/// crate builds, but keeps a typo from requesting terabytes.
const MAX_KRON_SIDE: usize = 1 << 24;

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let b = DenseMatrix::from_row_major(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = DenseMatrix::identity(2).kron(&b).unwrap();
        assert_eq!(k.rows(), 4);
        assert_eq!(k.cols(), 4);
        // top-left block is b, off-diagonal blocks are zero
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(0, 1)], 2.0);
        assert_eq!(k[(1, 0)], 3.0);
        assert_eq!(k[(1, 1)], 4.0);
        assert_eq!(k[(0, 2)], 0.0);
        assert_eq!(k[(2, 2)], 1.0);
        assert_eq!(k[(3, 3)], 4.0);
    }

    #[test]
    fn kron_of_diagonals_multiplies_diagonals() {
        let a = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        let b = DenseMatrix::from_diagonal(&[2.0, 1.0]);
        let k = a.kron(&b).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| k[(i, i)]).collect();
        assert_eq!(diag, vec![6.0, 3.0, 2.0, 1.0]);
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| k[(i, j)].abs())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn kron_entries_match_direct_expansion() {
        // Four-loop expansion oracle on fixed 2x2 factors.
        let a = DenseMatrix::from_row_major(2, 2, &[0.3, -1.2, 2.5, 0.7]);
        let b = DenseMatrix::from_row_major(2, 2, &[-0.4, 1.1, 0.9, -2.2]);
        let k = a.kron(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let expect = a[(i, j)] * b[(p, q)];
                        assert_eq!(k[(2 * i + p, 2 * j + q)], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_overflow_is_an_error() {
        let a = DenseMatrix::zeros(1 << 20, 1);
        let b = DenseMatrix::zeros(1 << 20, 1);
        assert!(matches!(
            a.kron(&b),
            Err(LinalgError::AllocationTooLarge { .. })
        ));
    }

    #[test]
    fn vectorize_stacks_columns() {
        let m = DenseMatrix::from_row_major(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = m.vectorize();
        assert_eq!(v.rows(), 4);
        assert_eq!(v.cols(), 1);
        assert_eq!(v.entries(), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn vectorize_is_identity_on_columns() {
        let c = DenseMatrix::column_vector(&[5.0, -1.0, 2.0]);
        assert_eq!(c.vectorize(), c);
    }

    #[test]
    fn from_vectorized_round_trips() {
        let m = DenseMatrix::from_row_major(3, 2, &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let back = DenseMatrix::from_vectorized(&m.vectorize(), 3, 2);
        assert_eq!(back, m);
    }

    #[test]
    fn frobenius_norm_basics() {
        assert_eq!(DenseMatrix::zeros(3, 3).frobenius_norm(), 0.0);
        assert!((DenseMatrix::identity(2).frobenius_norm() - 2.0_f64.sqrt()).abs() < 1e-15);
        let m = DenseMatrix::from_row_major(1, 2, &[3.0, 4.0]);
        assert_eq!(m.frobenius_norm(), 5.0);
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DenseMatrix::from_row_major(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.entries(), &[58.0, 64.0, 139.0, 154.0]);
    }
}
