//! Compressed sparse row matrices and the few dense-vector kernels the
//! solvers need.
//!
//! Storage is classic three-array CSR (`row_ptr`, `col_idx`, `values`) with
//! column indices strictly increasing within each row. Everything is generic
//! over the [`Scalar`] contract so the same matrix-vector product code runs
//! on plain reals and on dual numbers (where it applies the product rule
//! entrywise, yielding `ẏ = Ȧx + Aẋ` for free).

mod matrix_market;
mod oracle;

pub use matrix_market::{
    parse_matrix_market, parse_matrix_market_str, read_matrix_market_file, write_matrix_market,
    MatrixMarketError,
};
pub use oracle::{condition_number, dense_solve, OracleError, CONDITION_MAX_DIM, ORACLE_MAX_DIM};

use crate::scalar::Scalar;

/// Dense vectors are plain `Vec`s; iterates, right-hand sides, and tangents
/// all use this alias.
pub type DenseVector<S> = Vec<S>;

/// Sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<S> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> CsrMatrix<S> {
    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are summed, matching the Matrix Market
    /// convention for repeated entries.
    ///
    /// Panics if any index lies outside `nrows × ncols`.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, S)]) -> Self {
        for &(i, j, _) in triplets {
            assert!(
                i < nrows && j < ncols,
                "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
            );
        }
        let mut entries = triplets.to_vec();
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut rows: Vec<usize> = Vec::with_capacity(entries.len());
        let mut col_idx: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<S> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            if rows.last() == Some(&i) && col_idx.last() == Some(&j) {
                let last = values.last_mut().unwrap();
                *last += v;
            } else {
                rows.push(i);
                col_idx.push(j);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for &i in &rows {
            row_ptr[i + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_parts(nrows, ncols, row_ptr, col_idx, values)
    }

    /// Builds a CSR matrix from raw parts, asserting the structural
    /// invariants (monotone `row_ptr`, strictly increasing in-row columns).
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<S>,
    ) -> Self {
        let m = CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        };
        m.assert_invariants();
        m
    }

    fn assert_invariants(&self) {
        assert_eq!(self.row_ptr.len(), self.nrows + 1, "row_ptr length");
        assert_eq!(self.row_ptr[0], 0, "row_ptr must start at 0");
        assert_eq!(
            *self.row_ptr.last().unwrap(),
            self.values.len(),
            "row_ptr must end at nnz"
        );
        assert_eq!(self.col_idx.len(), self.values.len());
        for i in 0..self.nrows {
            assert!(self.row_ptr[i] <= self.row_ptr[i + 1], "row_ptr monotone");
            let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            for w in row.windows(2) {
                assert!(w[0] < w[1], "columns strictly increasing in row {i}");
            }
            if let Some(&last) = row.last() {
                assert!(last < self.ncols, "column index out of range in row {i}");
            }
        }
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        let triplets: Vec<(usize, usize, S)> = (0..n).map(|i| (i, i, S::one())).collect();
        Self::from_triplets(n, n, &triplets)
    }

    /// A diagonal matrix with the given entries.
    pub fn diagonal(diag: &[S]) -> Self {
        let triplets: Vec<(usize, usize, S)> =
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// The stored entry at `(i, j)`, if any.
    pub fn entry(&self, i: usize, j: usize) -> Option<S> {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[row.clone()];
        cols.binary_search(&j)
            .ok()
            .map(|k| self.values[row.start + k])
    }

    /// Iterates stored entries as `(row, col, value)` in CSR order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// Whether `self` and `other` share the exact sparsity pattern.
    pub fn same_pattern<T: Scalar>(&self, other: &CsrMatrix<T>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// A matrix with the same pattern and mapped values.
    pub fn map_values<T: Scalar>(&self, mut f: impl FnMut(S) -> T) -> CsrMatrix<T> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pairs the values of two same-pattern matrices into a new matrix.
    /// Panics if the patterns differ.
    pub fn zip_values<T: Scalar, U: Scalar>(
        &self,
        other: &CsrMatrix<T>,
        mut f: impl FnMut(S, T) -> U,
    ) -> CsrMatrix<U> {
        assert!(
            self.same_pattern(other),
            "zip_values requires identical sparsity patterns"
        );
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Sparse matrix–vector product `y = A·x`.
    ///
    /// Accumulation runs left to right within each row, so the floating-point
    /// result is deterministic and identical across scalar instantiations
    /// with equal primal data.
    pub fn spmv(&self, x: &[S]) -> DenseVector<S> {
        assert_eq!(
            x.len(),
            self.ncols,
            "spmv: vector length {} does not match ncols {}",
            x.len(),
            self.ncols
        );
        let mut y = vec![S::zero(); self.nrows];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = S::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
        y
    }
}

/// Dot product, accumulated in index order.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Euclidean norm `√(v·v)`.
pub fn norm2<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// `y += alpha·x`.
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    assert_eq!(x.len(), y.len(), "axpy: length mismatch");
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Elementwise `a - b`.
pub fn vsub<S: Scalar>(a: &[S], b: &[S]) -> DenseVector<S> {
    assert_eq!(a.len(), b.len(), "vsub: length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Whether every primal part in the slice is finite.
pub fn all_primal_finite<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|s| s.primal_is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn identity_spmv_returns_input() {
        let a = CsrMatrix::<f64>::identity(3);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(a.spmv(&x), x);
    }

    #[test]
    fn small_dense_spmv() {
        // [[1, 2], [0, 3]] · (1, 1) = (3, 3)
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        assert_eq!(a.spmv(&[1.0, 1.0]), vec![3.0, 3.0]);
    }

    #[test]
    fn dual_spmv_applies_product_rule() {
        // 1×1 matrix (2, 1) times vector (3, 0): value 6, tangent 1·3 + 2·0 = 3.
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, Dual::new(2.0, 1.0))]);
        assert_eq!(a.spmv(&[Dual::new(3.0, 0.0)]), vec![Dual::new(6.0, 3.0)]);
    }

    #[test]
    #[should_panic(expected = "spmv")]
    fn spmv_rejects_wrong_length() {
        let a = CsrMatrix::<f64>::identity(3);
        let _ = a.spmv(&[1.0, 2.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 0, 4.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.entry(0, 0), Some(3.5));
        assert_eq!(a.entry(1, 0), Some(4.0));
        assert_eq!(a.entry(1, 1), None);
    }

    #[test]
    fn triplets_round_trip_in_csr_order() {
        let a = CsrMatrix::from_triplets(2, 3, &[(1, 2, 5.0), (0, 1, 2.0), (1, 0, 3.0)]);
        let got: Vec<_> = a.triplets().collect();
        assert_eq!(got, vec![(0, 1, 2.0), (1, 0, 3.0), (1, 2, 5.0)]);
    }

    #[test]
    fn empty_rows_are_fine() {
        let a = CsrMatrix::from_triplets(3, 3, &[(2, 0, 1.0)]);
        assert_eq!(a.spmv(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn vector_kernels() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        let mut y = vec![1.0, 1.0];
        axpy(2.0, &[1.0, 10.0], &mut y);
        assert_eq!(y, vec![3.0, 21.0]);
        assert_eq!(vsub(&[3.0, 4.0], &[1.0, 1.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn finiteness_looks_at_primal_only() {
        let v = vec![Dual::new(1.0, f64::INFINITY)];
        assert!(all_primal_finite(&v));
        let w = vec![Dual::new(f64::NAN, 0.0)];
        assert!(!all_primal_finite(&w));
    }
}
