//! Compressed sparse row matrix over `f64`.
//!
//! Entries within a row are stored with strictly ascending column index, and
//! every kernel walks rows top-to-bottom, so all products are bit-reproducible.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from COO triples. Duplicate (row, col) entries are summed.
    pub fn from_triples(
        rows: usize,
        cols: usize,
        mut triples: Vec<(usize, usize, f64)>,
    ) -> CsrMatrix {
        triples.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triples.len());
        for (r, c, v) in triples {
            assert!(r < rows && c < cols, "triple out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// `self * dense`, walking each sparse row in storage (ascending column)
    /// order.
    pub fn spmm(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != dense.rows() {
            return Err(Error::Shape {
                op: "spmm",
                expected: format!("lhs cols == rhs rows ({})", self.cols),
                got: format!("{}", dense.rows()),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, dense.cols());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let dst = out.row_mut(i);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                let src = dense.row(c);
                for (d, &s) in dst.iter_mut().zip(src.iter()) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// Row `i` of `self * dense` without materializing the full product.
    pub fn spmm_row(&self, i: usize, dense: &DenseMatrix, out: &mut [f64]) {
        out.fill(0.0);
        let (cols, vals) = self.row(i);
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            let src = dense.row(c);
            for (d, &s) in out.iter_mut().zip(src.iter()) {
                *d += v * s;
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                out.set(i, c, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_sorted_and_merged() {
        let m = CsrMatrix::from_triples(
            2,
            3,
            vec![(1, 2, 4.0), (0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0)],
        );
        assert_eq!(m.nnz(), 3);
        let (c0, v0) = m.row(0);
        assert_eq!(c0, &[0, 1]);
        assert_eq!(v0, &[1.0, 5.0]);
        let (c1, v1) = m.row(1);
        assert_eq!(c1, &[2]);
        assert_eq!(v1, &[4.0]);
    }

    #[test]
    fn empty_rows_have_empty_spans() {
        let m = CsrMatrix::from_triples(4, 4, vec![(0, 0, 1.0), (3, 3, 1.0)]);
        assert_eq!(m.row(1).0.len(), 0);
        assert_eq!(m.row(2).0.len(), 0);
    }

    #[test]
    fn spmm_matches_dense_matmul() {
        // [DERIVED] oracle: dense matmul of the same operands.
        let m = CsrMatrix::from_triples(
            3,
            3,
            vec![(0, 1, 2.0), (1, 0, -1.0), (1, 2, 0.5), (2, 2, 3.0)],
        );
        let x = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let got = m.spmm(&x).unwrap();
        let want = m.to_dense().matmul(&x).unwrap();
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn spmm_dim_mismatch() {
        let m = CsrMatrix::from_triples(2, 3, vec![(0, 0, 1.0)]);
        let x = DenseMatrix::zeros(2, 2);
        assert!(m.spmm(&x).is_err());
    }

    #[test]
    fn spmm_row_matches_full() {
        let m = CsrMatrix::from_triples(
            3,
            3,
            vec![(0, 1, 2.0), (1, 0, -1.0), (1, 2, 0.5), (2, 2, 3.0)],
        );
        let x = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let full = m.spmm(&x).unwrap();
        let mut buf = vec![0.0; 2];
        for i in 0..3 {
            m.spmm_row(i, &x, &mut buf);
            assert_eq!(&buf[..], full.row(i));
        }
    }
}
