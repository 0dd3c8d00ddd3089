use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LeastSquaresProblem;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};

/// Recipe for a random problem with a prescribed Gram spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// `λ1 / λr` of the Gram matrix.
    pub kappa: f64,
    pub rank: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Parses `N,d,kappa,rank,seed`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Config(format!(
                "synthetic spec `{text}` needs N,d,kappa,rank,seed"
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer `{s}` in synthetic spec")))
        };
        let kappa: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad kappa `{}`", parts[2])))?;
        let seed: u64 = parts[4]
            .parse()
            .map_err(|_| Error::Config(format!("bad seed `{}`", parts[4])))?;
        Ok(SyntheticSpec {
            n: int(parts[0])?,
            d: int(parts[1])?,
            kappa,
            rank: int(parts[3])?,
            seed,
        })
    }

    pub fn label(&self) -> String {
        format!(
            "synthetic_{}x{}_k{}_r{}_s{}",
            self.n, self.d, self.kappa, self.rank, self.seed
        )
    }
}

/// Orthonormal `rows × k` basis from Gaussian columns via modified Gram–Schmidt.
fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> DenseMatrix {
    loop {
        let mut cols: Vec<Vector> = Vec::with_capacity(k);
        let mut ok = true;
        for _ in 0..k {
            let mut v: Vec<f64> = (0..rows).map(|_| StandardNormal.sample(rng)).collect();
            for _ in 0..2 {
                for c in &cols {
                    let p: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut()
                        .zip(c.iter())
                        .for_each(|(vi, ci)| *vi -= p * ci);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(Vector::from(v));
        }
        if ok {
            return DenseMatrix::from_columns(&cols);
        }
    }
}

/// `A = U·diag(σ)·Vᵀ` with `σᵢ²` log-spaced from `κ` down to 1 and `x* = 1`.
pub fn synthetic_problem(spec: &SyntheticSpec) -> Result<LeastSquaresProblem> {
    let SyntheticSpec {
        n,
        d,
        kappa,
        rank,
        seed,
    } = *spec;
    if n == 0 || d == 0 {
        return Err(Error::Empty("synthetic dimensions"));
    }
    if rank == 0 || rank > n.min(d) {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} outside 1..={}",
            n.min(d)
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa {kappa} must be a finite value ≥ 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthonormal(&mut rng, n, rank);
    let v = random_orthonormal(&mut rng, d, rank);
    let sigma: Vec<f64> = (0..rank)
        .map(|i| {
            let frac = if rank == 1 {
                0.0
            } else {
                i as f64 / (rank - 1) as f64
            };
            kappa.powf(1.0 - frac).sqrt()
        })
        .collect();
    let mut us = u;
    for i in 0..n {
        for (x, s) in us.row_mut(i).iter_mut().zip(&sigma) {
            *x *= s;
        }
    }
    let a = us.matmul(&v.transpose());
    Ok(LeastSquaresProblem::with_ones_solution(spec.label(), a))
}

/// Nine-point Laplacian on an `n × n` grid: 8 on the diagonal, −1 for each
/// of the up to eight neighbours, row-major node order.
pub fn nine_point_laplacian(n: usize) -> DenseMatrix {
    let size = n * n;
    let mut a = DenseMatrix::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            a.set(row, row, 8.0);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni >= 0 && nj >= 0 && (ni as usize) < n && (nj as usize) < n {
                        a.set(row, ni as usize * n + nj as usize, -1.0);
                    }
                }
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, spectral_summary, DEFAULT_RANK_TOL};

    #[test]
    fn synthetic_spectrum_matches_request() {
        let spec = SyntheticSpec {
            n: 20,
            d: 8,
            kappa: 100.0,
            rank: 8,
            seed: 3,
        };
        let p = synthetic_problem(&spec).unwrap();
        assert_eq!(p.a.shape(), (20, 8));
        let s = spectral_summary(&gram(&p.a).unwrap(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank, 8);
        assert!((s.kappa - 100.0).abs() < 1e-8);
        assert!((s.lambda1 - 100.0).abs() < 1e-9);
        assert!(p.a.mul_vec(p.x_star.as_ref().unwrap()).distance(&p.b) < 1e-12);
    }

    #[test]
    fn synthetic_rank_deficient() {
        let spec = SyntheticSpec {
            n: 10,
            d: 6,
            kappa: 10.0,
            rank: 3,
            seed: 5,
        };
        let p = synthetic_problem(&spec).unwrap();
        let s = spectral_summary(&gram(&p.a).unwrap(), 1e-10).unwrap();
        assert_eq!(s.rank, 3);
        assert!(s.row_space_kappa);
        assert!((s.kappa - 10.0).abs() < 1e-8);
        assert!(synthetic_problem(&SyntheticSpec { rank: 7, ..spec }).is_err());
    }

    #[test]
    fn synthetic_is_seeded() {
        let spec = SyntheticSpec {
            n: 6,
            d: 3,
            kappa: 4.0,
            rank: 3,
            seed: 11,
        };
        assert_eq!(
            synthetic_problem(&spec).unwrap().a,
            synthetic_problem(&spec).unwrap().a
        );
        let other = SyntheticSpec { seed: 12, ..spec };
        assert_ne!(
            synthetic_problem(&spec).unwrap().a,
            synthetic_problem(&other).unwrap().a
        );
    }

    #[test]
    fn parse_spec() {
        let s = SyntheticSpec::parse("20, 8, 100, 8, 7").unwrap();
        assert_eq!(
            s,
            SyntheticSpec {
                n: 20,
                d: 8,
                kappa: 100.0,
                rank: 8,
                seed: 7
            }
        );
        assert!(SyntheticSpec::parse("1,2,3").is_err());
    }

    #[test]
    fn laplacian_structure() {
        let a = nine_point_laplacian(3);
        assert_eq!(a.shape(), (9, 9));
        // Corner, edge and centre nodes have 3, 5 and 8 neighbours.
        assert_eq!(a.row(0).iter().filter(|v| **v == -1.0).count(), 3);
        assert_eq!(a.row(1).iter().filter(|v| **v == -1.0).count(), 5);
        assert_eq!(a.row(4).iter().filter(|v| **v == -1.0).count(), 8);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(nine_point_laplacian(30).nnz(), 7744);
    }
}
