//! Minimal CSR sparse matrix with deterministic construction.
//!
//! Assembly collects (row, col, value) triplets in a fixed order; duplicates
//! are merged by a stable sort so results are bit-reproducible regardless of
//! how contributions were produced.

use nalgebra::{DMatrix, DVector};

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from triplets, summing duplicates. Triplets are sorted by
    /// (row, col) with a stable sort, then adjacent duplicates are merged in
    /// that order, so the result does not depend on the input ordering.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in &triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
        }
        // prefix sum
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        // merge duplicates within each row (entries are already col-sorted)
        let mut m_indptr = vec![0usize; nrows + 1];
        let mut m_indices = Vec::with_capacity(indices.len());
        let mut m_values = Vec::with_capacity(values.len());
        for r in 0..nrows {
            let (start, end) = (indptr[r], indptr[r + 1]);
            let mut k = start;
            while k < end {
                let c = indices[k];
                let mut v = values[k];
                let mut k2 = k + 1;
                while k2 < end && indices[k2] == c {
                    v += values[k2];
                    k2 += 1;
                }
                m_indices.push(c);
                m_values.push(v);
                k = k2;
            }
            m_indptr[r + 1] = m_indices.len();
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr: m_indptr,
            indices: m_indices,
            values: m_values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[s..e].binary_search(&c) {
            Ok(k) => self.values[s + k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for r in 0..self.nrows {
            let mut acc = T::zero();
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                y[c] += v * x[r];
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }

    /// Principal submatrix A[rows, cols], reindexed densely.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix<T> {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let mut triplets = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_pos[c] != usize::MAX {
                    triplets.push((ri, col_pos[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), triplets)
    }

    pub fn submatrix_dense(&self, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
        self.submatrix(rows, cols).to_dense()
    }

    /// Largest |A - A^t| entry, relative to the largest |A| entry.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.nrows, self.ncols);
        let mut max_abs = T::zero();
        let mut max_diff = T::zero();
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                max_abs = max_abs.max(v.abs());
                max_diff = max_diff.max((v - self.get(c, r)).abs());
            }
        }
        if max_abs > T::zero() {
            max_diff / max_abs
        } else {
            T::zero()
        }
    }

    /// Congruence transform C^t A C for a rectangular basis map C
    /// (rows: A's coordinates, cols: the new coordinates).
    pub fn congruence(&self, c: &CsrMatrix<T>) -> CsrMatrix<T> {
        assert_eq!(self.nrows, self.ncols);
        assert_eq!(c.nrows, self.nrows);
        let mut triplets = Vec::new();
        for i in 0..self.nrows {
            for (j, a_ij) in self.row(i) {
                for (p, c_ip) in c.row(i) {
                    for (q, c_jq) in c.row(j) {
                        triplets.push((p, q, c_ip * a_ij * c_jq));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(c.ncols, c.ncols, triplets)
    }

    /// Scales every stored entry (used only by tests).
    pub fn scaled(&self, s: T) -> CsrMatrix<T> {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Coordinate text dump, one `row col value` line per stored entry,
    /// 0-based, row-major. Debugging aid.
    pub fn coo_string(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut s = String::new();
        for r in 0..self.nrows() {
            for (c, v) in self.row(r) {
                s.push_str(&format!("{r} {c} {v}\n"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_dump_lists_entries_in_row_major_order() {
        let a = CsrMatrix::<f64>::from_triplets(2, 2, vec![(1, 0, -1.5), (0, 1, 3.0)]);
        assert_eq!(a.coo_string(), "0 1 3\n1 0 -1.5\n");
    }

    #[test]
    fn triplets_merge_duplicates() {
        let a = CsrMatrix::<f64>::from_triplets(
            2,
            2,
            vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0), (0, 0, 4.0)],
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = CsrMatrix::<f64>::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0), (2, 1, -1.0)],
        );
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let y = a.matvec(&x);
        let yd = a.to_dense() * &x;
        assert_eq!(y, yd);
        let z = a.matvec_transpose(&DVector::from_vec(vec![1.0, 1.0, 1.0]));
        let zd = a.to_dense().transpose() * DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert_eq!(z, zd);
    }

    #[test]
    fn congruence_matches_dense_triple_product() {
        let a = CsrMatrix::<f64>::from_triplets(
            3,
            3,
            vec![(0, 0, 2.0), (1, 1, 3.0), (2, 2, 4.0), (0, 1, 1.0), (1, 0, 1.0)],
        );
        let c = CsrMatrix::<f64>::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 0, 1.0), (1, 1, 0.5), (2, 1, -1.0)],
        );
        let m = a.congruence(&c).to_dense();
        let md = c.to_dense().transpose() * a.to_dense() * c.to_dense();
        assert!((m - md).abs().max() < 1e-14);
    }

    #[test]
    fn asymmetry_detects_nonsymmetric() {
        let s = CsrMatrix::<f64>::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(s.asymmetry(), 0.0);
        let ns = CsrMatrix::<f64>::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 0.5)]);
        assert!(ns.asymmetry() > 0.4);
    }
}
