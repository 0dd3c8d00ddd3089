//! Symmetric eigensolver: Householder tridiagonalization followed by
//! implicit QL with Wilkinson-style shifts (the EISPACK tred2/tql2 pair).
//!
//! The working matrix is stored transposed relative to the textbook
//! formulation so that every inner loop walks a contiguous row.

use super::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row `k` is the unit eigenvector for `values[k]`.
    pub vectors: Option<DenseMatrix>,
}

/// Eigen-decomposes a symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen(a: &DenseMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigen on {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::Empty("eigen input"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigen input"));
    }
    if n == 1 {
        return Ok(SymmetricEigen {
            values: vec![a.get(0, 0)],
            vectors: want_vectors.then(|| DenseMatrix::identity(1)),
        });
    }

    // w[j][k] plays the role of V[k][j]; `a` is symmetric so w starts as a.
    let mut w: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    // Mirror the lower triangle so asymmetric rounding in the input is ignored.
    for i in 0..n {
        for j in 0..i {
            w[j][i] = w[i][j];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut w, &mut d, &mut e);
    tql2(&mut w, &mut d, &mut e, want_vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut v = DenseMatrix::zeros(n, n);
        for (k, &src) in order.iter().enumerate() {
            v.row_mut(k).copy_from_slice(&w[src]);
        }
        v
    });
    Ok(SymmetricEigen { values, vectors })
}

fn tred2(w: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = w[j][n - 1];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j][i - 1];
                w[j][i] = 0.0;
                w[i][j] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                w[i][j] = f;
                let wj = &w[j];
                g = e[j] + wj[j] * f;
                for k in (j + 1)..i {
                    g += wj[k] * d[k];
                    e[k] += wj[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let wj = &mut w[j];
                for k in j..i {
                    wj[k] -= f * e[k] + g * d[k];
                }
                d[j] = wj[i - 1];
                wj[i] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n - 1 {
        w[i][n - 1] = w[i][i];
        w[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = w[i + 1][k] / h;
            }
            for j in 0..=i {
                let (lo, hi) = w.split_at_mut(i + 1);
                let col_next = &hi[0];
                let wj = &mut lo[j];
                let mut g = 0.0;
                for k in 0..=i {
                    g += col_next[k] * wj[k];
                }
                for k in 0..=i {
                    wj[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            w[i + 1][k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = w[j][n - 1];
        w[j][n - 1] = 0.0;
    }
    w[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(w: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], want_vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    let max_iter = 30 * n.max(10);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        let m = m.min(n - 1);

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence(iter));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if want_vectors {
                        let (lo, hi) = w.split_at_mut(i + 1);
                        let vi = &mut lo[i];
                        let vi1 = &mut hi[0];
                        for k in 0..n {
                            let t = vi1[k];
                            vi1[k] = s * vi[k] + c * t;
                            vi[k] = c * vi[k] - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
