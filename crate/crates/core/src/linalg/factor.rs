use super::{dot, DenseMatrix, Vector};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("cholesky needs a square matrix".into()));
        }
        let n = a.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = a.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Singular(format!("non-positive pivot {s:e} at {i}")));
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    let v = s / l.get(j, j);
                    l.set(i, j, v);
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Vector {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        Vector::from(y)
    }

    /// `A⁻¹`, symmetrized.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        // Linv = L⁻¹ (lower), then A⁻¹ = Linvᵀ·Linv.
        let mut linv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            linv.set(j, j, 1.0 / self.l.get(j, j));
            for i in (j + 1)..n {
                let mut s = 0.0;
                for k in j..i {
                    s -= self.l.get(i, k) * linv.get(k, j);
                }
                linv.set(i, j, s / self.l.get(i, i));
            }
        }
        let mut inv = linv.tr_matmul(&linv);
        inv.symmetrize();
        inv
    }

    /// Crude reciprocal condition estimate `(min Lᵢᵢ / max Lᵢᵢ)²`.
    pub fn reciprocal_condition(&self) -> f64 {
        let diag = self.l.diag();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
        (lo / hi).powi(2)
    }
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("LU input"));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax == 0.0 || pmax <= f64::EPSILON * 1e-3 * scale {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu.get(k, k);
            let (upper, lower) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        row[j] -= factor * pivot_row[j];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vector {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
        Vector::from(y)
    }

    /// `max|Uᵢᵢ| / min|Uᵢᵢ|`, a cheap lower bound on the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.lu.rows();
        let (lo, hi) = (0..n)
            .map(|i| self.lu.get(i, i).abs())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        hi / lo
    }
}
