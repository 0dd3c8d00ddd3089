//! Dense real linear algebra.
//!
//! Everything the solvers need fits in a row-major `DenseMatrix` plus a thin
//! `Vector` wrapper. Dimensions in this problem family stay in the hundreds,
//! so plain O(d³) factorizations are used throughout.

mod eigen;
mod factor;
mod packed;

use std::fmt;
use std::ops::{Deref, DerefMut};

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use factor::{Cholesky, Lu};
pub use packed::PackedRows;

use crate::error::{Error, Result};

/// Default relative threshold below which eigenvalues of a Gram matrix count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// A real column vector.
#[derive(Clone, Default, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn from_elem(len: usize, value: f64) -> Self {
        Vector(vec![value; len])
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Vector(values.to_vec())
    }

    /// The `j`-th standard basis vector of length `len`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = Vector::zeros(len);
        v.0[j] = 1.0;
        v
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &[f64]) {
        axpy(a, x, &mut self.0);
    }

    pub fn scaled(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|v| a * v).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        DenseMatrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    /// Builds a matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(cols: &[Vector]) -> Self {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |c| c.len());
        let mut m = DenseMatrix::zeros(nrows, ncols);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows, "ragged columns");
            m.set_col(j, c);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self.set(i, j, x);
        }
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn diag(&self) -> Vector {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Stacks `blocks` vertically. All blocks must share a column count.
    pub fn vstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(Error::Dimension(format!(
                    "vstack: {} vs {} columns",
                    b.cols, cols
                )));
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> DenseMatrix {
        DenseMatrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// `self · x`
    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.cols, "mul_vec dimension");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vector {
        assert_eq!(y.len(), self.rows, "tr_mul_vec dimension");
        let mut out = Vector::zeros(self.cols);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    /// `self · other`
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        out
    }

    /// `selfᵀ · other`
    pub fn tr_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "tr_matmul dimension");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for (k, &a) in self.row(r).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, b, out.row_mut(k));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scaled(&self, a: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape());
        axpy(a, &other.data, &mut self.data);
    }

    pub fn add_diag(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix with `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Number of exactly nonzero entries.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Eigenvalue summary of a positive semi-definite Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    /// Eigenvalues in non-increasing order, tiny negatives clamped to zero.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub lambda1: f64,
    /// Smallest nonzero eigenvalue.
    pub lambda_r: f64,
    /// Smallest eigenvalue (zero when rank-deficient).
    pub lambda_d: f64,
    /// `λ1/λd`, or `λ1/λr` when rank-deficient (see `row_space_kappa`).
    pub kappa: f64,
    /// Set when `kappa` is the condition number on the row space only.
    pub row_space_kappa: bool,
}

impl SpectralSummary {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.eigenvalues.len()
    }

    /// Builds a summary straight from a list of eigenvalues.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, rank_tol: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Empty("eigenvalue list"));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let lambda1 = eigenvalues[0];
        if lambda1 <= 0.0 {
            return Err(Error::InvalidParameter("Gram matrix is zero".into()));
        }
        let threshold = rank_tol * lambda1;
        for v in eigenvalues.iter_mut() {
            if *v < -threshold {
                return Err(Error::NegativeEigenvalue { value: *v });
            }
            if *v <= threshold {
                *v = 0.0;
            }
        }
        let rank = eigenvalues.iter().take_while(|v| **v > 0.0).count();
        let lambda_r = eigenvalues[rank - 1];
        let lambda_d = *eigenvalues.last().unwrap();
        let full = rank == eigenvalues.len();
        Ok(SpectralSummary {
            rank,
            lambda1,
            lambda_r,
            lambda_d,
            kappa: if full {
                lambda1 / lambda_d
            } else {
                lambda1 / lambda_r
            },
            row_space_kappa: !full,
            eigenvalues,
        })
    }
}

/// `AᵀA`, symmetrized to remove rounding asymmetry.
pub fn gram(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Empty("gram input"));
    }
    let mut g = a.tr_matmul(a);
    g.symmetrize();
    Ok(g)
}

/// Eigenvalues, rank and condition number of a symmetric PSD matrix.
pub fn spectral_summary(g: &DenseMatrix, rank_tol: f64) -> Result<SpectralSummary> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "spectral_summary on {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    if g.rows() == 0 {
        return Err(Error::Empty("spectral_summary input"));
    }
    let scale = g.max_abs().max(f64::MIN_POSITIVE);
    let asym = g.max_asymmetry();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let eig = symmetric_eigen(g, false)?;
    SpectralSummary::from_eigenvalues(eig.values, rank_tol)
}

/// `(G + βI)⁻¹` via Cholesky, falling back to an eigen pseudo-inverse when
/// the factorization breaks down.
pub fn k_beta(g: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    if !g.is_square() {
        return Err(Error::Dimension("k_beta needs a square matrix".into()));
    }
    if beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta = {beta} < 0")));
    }
    let mut shifted = g.clone();
    shifted.add_diag(beta);
    if let Ok(chol) = Cholesky::new(&shifted) {
        return Ok(chol.inverse());
    }
    // Near-singular: invert on the numerically nonzero spectrum, but refuse
    // an actual singular shift.
    let eig = symmetric_eigen(&shifted, true)?;
    let vecs = eig.vectors.as_ref().expect("vectors requested");
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = DEFAULT_RANK_TOL * top;
    if eig.values.iter().any(|v| *v <= floor) {
        return Err(Error::Singular(format!(
            "G + {beta}·I is singular (smallest eigenvalue {:e})",
            eig.values.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let n = g.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        let v = vecs.row(k);
        for i in 0..n {
            let s = v[i] / lam;
            axpy(s, v, inv.row_mut(i));
        }
    }
    inv.symmetrize();
    Ok(inv)
}

/// `‖K − Kref‖_F`
pub fn frobenius_distance(k: &DenseMatrix, kref: &DenseMatrix) -> Result<f64> {
    if k.shape() != kref.shape() {
        return Err(Error::Dimension(format!(
            "frobenius_distance {:?} vs {:?}",
            k.shape(),
            kref.shape()
        )));
    }
    Ok(k.as_slice()
        .iter()
        .zip(kref.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Projection onto the nullspace of a full-row-rank `A`: `I − Aᵀ(AAᵀ)⁻¹A`.
pub fn row_space_projection(a: &DenseMatrix) -> Result<DenseMatrix> {
    let chol = row_gram_cholesky(a)?;
    // (AAᵀ)⁻¹A, column by column of A.
    let n = a.cols();
    let mut solved = DenseMatrix::zeros(a.rows(), n);
    for j in 0..n {
        let x = chol.solve(&a.col(j));
        solved.set_col(j, &x);
    }
    let mut p = a.tr_matmul(&solved).scaled(-1.0);
    p.add_diag(1.0);
    p.symmetrize();
    Ok(p)
}

/// Minimum-norm solution of the underdetermined system `A x = b`.
pub fn min_norm_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vector> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "{} observations for {} rows",
            b.len(),
            a.rows()
        )));
    }
    let chol = row_gram_cholesky(a)?;
    let y = chol.solve(b);
    Ok(a.tr_mul_vec(&y))
}

pub(crate) fn row_gram_cholesky(a: &DenseMatrix) -> Result<Cholesky> {
    if a.rows() == 0 {
        return Err(Error::Empty("row space of an empty matrix"));
    }
    let mut aat = a.matmul(&a.transpose());
    aat.symmetrize();
    let chol = Cholesky::new(&aat)
        .map_err(|_| Error::Singular("A·Aᵀ is singular: rows are linearly dependent".into()))?;
    // Cholesky can succeed on numerically dependent rows; reject those too.
    if chol.reciprocal_condition() < 1e-14 {
        return Err(Error::Singular(
            "A·Aᵀ is numerically singular: rows are nearly dependent".into(),
        ));
    }
    Ok(chol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn gram_small_cases() {
        let g = gram(&DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]])).unwrap();
        assert_eq!(g, DenseMatrix::from_diag(&[4.0, 1.0]));
        let g = gram(&DenseMatrix::from_rows(&[[1.0], [1.0]])).unwrap();
        assert_eq!(g.as_slice(), &[2.0]);
        assert!(gram(&DenseMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn gram_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 3, 2);
        let g = gram(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a.get(k, i) * a.get(k, j);
                }
                assert!((g.get(i, j) - s).abs() < 1e-14);
            }
        }
        assert_eq!(g.max_asymmetry(), 0.0);
    }

    #[test]
    fn spectral_summary_diagonal() {
        let s = spectral_summary(&DenseMatrix::from_diag(&[4.0, 1.0]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.eigenvalues, vec![4.0, 1.0]);
        assert_eq!(s.rank, 2);
        assert_eq!(s.kappa, 4.0);
        assert!(!s.row_space_kappa);

        let s = spectral_summary(&DenseMatrix::from_diag(&[4.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.eigenvalues, vec![4.0, 0.0]);
        assert_eq!(s.rank, 1);
        assert_eq!(s.lambda_r, 4.0);
        assert_eq!(s.lambda_d, 0.0);
        assert!(s.row_space_kappa);
    }

    #[test]
    fn spectral_summary_rejects_bad_input() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(
            spectral_summary(&m, 1e-12),
            Err(Error::NotSymmetric { .. })
        ));
        let m = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            spectral_summary(&m, 1e-12),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn spectral_summary_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 9, 6);
            let g = gram(&a).unwrap();
            let s = spectral_summary(&g, DEFAULT_RANK_TOL).unwrap();
            let sum: f64 = s.eigenvalues.iter().sum();
            let sq: f64 = s.eigenvalues.iter().map(|v| v * v).sum();
            assert!((sum - g.trace()).abs() <= 1e-8 * g.trace());
            let f2 = g.frobenius_norm().powi(2);
            assert!((sq - f2).abs() <= 1e-8 * f2);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn k_beta_diagonal() {
        let g = DenseMatrix::from_diag(&[4.0, 1.0]);
        assert_eq!(
            k_beta(&g, 0.0).unwrap(),
            DenseMatrix::from_diag(&[0.25, 1.0])
        );
        let k1 = k_beta(&g, 1.0).unwrap();
        assert!(k1.sub(&DenseMatrix::from_diag(&[0.2, 0.5])).max_abs() < 1e-15);
        assert!(matches!(
            k_beta(&DenseMatrix::from_diag(&[4.0, 0.0]), 0.0),
            Err(Error::Singular(_))
        ));
        // Rank deficient but shifted is fine.
        let k = k_beta(&DenseMatrix::from_diag(&[4.0, 0.0]), 2.0).unwrap();
        assert!((k.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k_beta_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for beta in [0.0, 0.3, 2.0] {
            let a = random_matrix(&mut rng, 8, 5);
            let g = gram(&a).unwrap();
            let k = k_beta(&g, beta).unwrap();
            let mut shifted = g.clone();
            shifted.add_diag(beta);
            let r = shifted.matmul(&k).sub(&DenseMatrix::identity(5));
            assert!(
                r.frobenius_norm() <= 1e-10,
                "residual {}",
                r.frobenius_norm()
            );
            assert_eq!(k.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn frobenius_distance_cases() {
        let k = DenseMatrix::from_diag(&[3.0, 4.0]);
        assert_eq!(frobenius_distance(&k, &k).unwrap(), 0.0);
        assert_eq!(
            frobenius_distance(&DenseMatrix::zeros(2, 2), &k).unwrap(),
            5.0
        );
        assert!(frobenius_distance(&DenseMatrix::zeros(2, 3), &k).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_matrix(&mut rng, 4, 4);
        let b = random_matrix(&mut rng, 4, 4);
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += (a.get(i, j) - b.get(i, j)).powi(2);
            }
        }
        assert!((frobenius_distance(&a, &b).unwrap() - s.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn projection_cases() {
        let p = row_space_projection(&DenseMatrix::from_rows(&[[1.0, 0.0]])).unwrap();
        assert_eq!(p, DenseMatrix::from_diag(&[0.0, 1.0]));
        let p = row_space_projection(&DenseMatrix::identity(3)).unwrap();
        assert!(p.max_abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_matrix(&mut rng, 2, 4);
        let p = row_space_projection(&a).unwrap();
        assert!(p.matmul(&a.transpose()).max_abs() < 1e-10);
        assert!(p.matmul(&p).sub(&p).max_abs() < 1e-10);
        let eig = symmetric_eigen(&p, false).unwrap();
        for v in eig.values {
            assert!(v.abs() < 1e-8 || (v - 1.0).abs() < 1e-8);
        }

        let dup = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]);
        assert!(matches!(
            row_space_projection(&dup),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn min_norm_solution_cases() {
        let x = min_norm_solution(&DenseMatrix::from_rows(&[[1.0, 0.0]]), &[1.0]).unwrap();
        assert_eq!(&*x, &[1.0, 0.0]);
        let x = min_norm_solution(&DenseMatrix::identity(3), &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(&*x, &[1.0, -2.0, 0.5]);

        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = random_matrix(&mut rng, 2, 4);
        let b = [0.7, -1.3];
        let x = min_norm_solution(&a, &b).unwrap();
        let r = a.mul_vec(&x).sub(&b);
        assert!(r.norm() <= 1e-10 * Vector::from_slice(&b).norm());
    }
}
