use super::{axpy, DenseMatrix, Vector};

/// Row-wise list of the nonzero entries of a dense matrix.
///
/// Products through this view visit entries in the same order as the dense
/// kernels and only skip exact zeros, so results agree bit-for-bit with
/// `DenseMatrix::{mul_vec, tr_mul_vec, matmul, tr_matmul}`.
#[derive(Clone, Debug)]
pub struct PackedRows {
    rows: usize,
    cols: usize,
    row_start: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl PackedRows {
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut row_start = Vec::with_capacity(a.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_start.push(values.len());
        }
        PackedRows {
            rows: a.rows(),
            cols: a.cols(),
            row_start,
            col_idx,
            values,
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

    #[inline]
    fn entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_start[i]..self.row_start[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// `A·x`
    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = 0.0;
                for (j, a) in self.entries(i) {
                    s += a * x[j];
                }
                s
            })
            .collect()
    }

    /// `Aᵀ·y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vector {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (j, a) in self.entries(i) {
                    out[j] += yi * a;
                }
            }
        }
        Vector::from(out)
    }

    /// `A·K` for a `cols × p` matrix `K`.
    pub fn mul_mat(&self, k: &DenseMatrix) -> DenseMatrix {
        assert_eq!(k.rows(), self.cols);
        let mut out = DenseMatrix::zeros(self.rows, k.cols());
        for i in 0..self.rows {
            let out_row = out.row_mut(i);
            for (j, a) in self.entries(i) {
                axpy(a, k.row(j), out_row);
            }
        }
        out
    }

    /// `Aᵀ·Y` for a `rows × p` matrix `Y`.
    pub fn tr_mul_mat(&self, y: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, y.cols());
        self.tr_mul_mat_add(y, &mut out);
        out
    }

    /// `out += Aᵀ·Y`.
    pub fn tr_mul_mat_add(&self, y: &DenseMatrix, out: &mut DenseMatrix) {
        assert_eq!(y.rows(), self.rows);
        assert_eq!(out.shape(), (self.cols, y.cols()));
        for i in 0..self.rows {
            let yrow = y.row(i);
            for (j, a) in self.entries(i) {
                axpy(a, yrow, out.row_mut(j));
            }
        }
    }
}
