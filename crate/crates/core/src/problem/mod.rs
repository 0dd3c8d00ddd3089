//! Problem instances: the collective least-squares data, its split across
//! agents, and the convex-quadratic form of each agent's cost.

mod mtx;
mod synth;

pub use mtx::{load_matrix_market, parse_matrix_market};
pub use synth::{nine_point_laplacian, synthetic_problem, SyntheticSpec};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, PackedRows, Vector};

/// `min_x ½‖A x − B‖²`, optionally with a known minimizer.
#[derive(Clone, Debug)]
pub struct LeastSquaresProblem {
    pub name: String,
    pub a: DenseMatrix,
    pub b: Vector,
    pub x_star: Option<Vector>,
}

impl LeastSquaresProblem {
    pub fn new(name: impl Into<String>, a: DenseMatrix, b: Vector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Dimension(format!(
                "{} observations for {} rows",
                b.len(),
                a.rows()
            )));
        }
        Ok(LeastSquaresProblem {
            name: name.into(),
            a,
            b,
            x_star: None,
        })
    }

    /// Problem with `B = A·1` and `x* = 1`.
    pub fn with_ones_solution(name: impl Into<String>, a: DenseMatrix) -> Self {
        let (b, x_star) = synth_ones_observations(&a);
        LeastSquaresProblem {
            name: name.into(),
            a,
            b,
            x_star: Some(x_star),
        }
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `Aᵀ(A x − B)` computed centrally.
    pub fn gradient(&self, x: &[f64]) -> Vector {
        let r = self.a.mul_vec(x).sub(&self.b);
        self.a.tr_mul_vec(&r)
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        let r = self.a.mul_vec(x).sub(&self.b);
        0.5 * r.dot(&r)
    }
}

/// One agent's rows `(Aⁱ, Bⁱ)`.
#[derive(Clone, Debug)]
pub struct AgentShard {
    /// 1-based.
    pub agent_id: usize,
    pub a: DenseMatrix,
    pub b: Vector,
    packed: PackedRows,
}

impl AgentShard {
    pub fn new(agent_id: usize, a: DenseMatrix, b: Vector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Dimension(format!(
                "agent {agent_id}: {} observations for {} rows",
                b.len(),
                a.rows()
            )));
        }
        let packed = PackedRows::from_dense(&a);
        Ok(AgentShard {
            agent_id,
            a,
            b,
            packed,
        })
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// Nonzero view of `Aⁱ` used by the per-round kernels.
    pub fn packed(&self) -> &PackedRows {
        &self.packed
    }
}

/// One agent's quadratic cost `½xᵀPx − xᵀq + r`.
#[derive(Clone, Debug)]
pub struct QuadraticShard {
    pub agent_id: usize,
    pub p: DenseMatrix,
    pub q: Vector,
    pub r: f64,
}

impl QuadraticShard {
    pub fn new(agent_id: usize, p: DenseMatrix, q: Vector, r: f64) -> Result<Self> {
        if !p.is_square() || p.rows() != q.len() {
            return Err(Error::Dimension(format!(
                "agent {agent_id}: P is {:?}, q has {} entries",
                p.shape(),
                q.len()
            )));
        }
        let scale = p.max_abs().max(1.0);
        if p.max_asymmetry() > 1e-10 * scale {
            return Err(Error::NotSymmetric {
                asymmetry: p.max_asymmetry(),
            });
        }
        Ok(QuadraticShard { agent_id, p, q, r })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        0.5 * self.p.mul_vec(x).dot(x) - self.q.dot(x) + self.r
    }
}

/// Checks that `Σ Pⁱ` is positive semi-definite.
pub fn check_quadratic_convexity(shards: &[QuadraticShard]) -> Result<()> {
    let first = shards.first().ok_or(Error::Empty("quadratic shards"))?;
    let mut total = first.p.clone();
    for s in &shards[1..] {
        if s.dim() != first.dim() {
            return Err(Error::Dimension("quadratic shards disagree on d".into()));
        }
        total = total.add(&s.p);
    }
    total.symmetrize();
    let eig = crate::linalg::symmetric_eigen(&total, false)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lowest = eig.values[0];
    if lowest < -1e-10 * top.max(1.0) {
        return Err(Error::NegativeEigenvalue { value: lowest });
    }
    Ok(())
}

/// Observations for the all-ones solution: returns `(A·1, 1)`.
pub fn synth_ones_observations(a: &DenseMatrix) -> (Vector, Vector) {
    let x_star = Vector::from_elem(a.cols(), 1.0);
    (a.mul_vec(&x_star), x_star)
}

/// Contiguous row blocks: agents `1..m−1` get `⌊N/m⌋` rows, agent `m` the rest.
pub fn partition(p: &LeastSquaresProblem, m: usize) -> Result<Vec<AgentShard>> {
    let n = p.rows();
    if m == 0 {
        return Err(Error::InvalidParameter(
            "agent count must be at least 1".into(),
        ));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("{m} agents for {n} rows")));
    }
    let block = n / m;
    (0..m)
        .map(|i| {
            let start = i * block;
            let end = if i + 1 == m { n } else { start + block };
            AgentShard::new(
                i + 1,
                p.a.row_block(start, end),
                Vector::from_slice(&p.b[start..end]),
            )
        })
        .collect()
}

/// Quadratic form of a least-squares shard: `P = AᵀA`, `q = AᵀB`, `r = ½BᵀB`.
pub fn lsq_to_quadratic(s: &AgentShard) -> QuadraticShard {
    let mut p = s.a.tr_matmul(&s.a);
    p.symmetrize();
    QuadraticShard {
        agent_id: s.agent_id,
        p,
        q: s.a.tr_mul_vec(&s.b),
        r: 0.5 * s.b.dot(&s.b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gram;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize) -> LeastSquaresProblem {
        let a = DenseMatrix::from_vec(
            n,
            d,
            (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let b: Vector = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        LeastSquaresProblem::new("random", a, b).unwrap()
    }

    #[test]
    fn ones_observations() {
        let (b, x) = synth_ones_observations(&DenseMatrix::from_diag(&[2.0, 1.0]));
        assert_eq!(&*b, &[2.0, 1.0]);
        assert_eq!(&*x, &[1.0, 1.0]);
        let (b, _) = synth_ones_observations(&DenseMatrix::from_rows(&[[1.0, 1.0]]));
        assert_eq!(&*b, &[2.0]);
    }

    #[test]
    fn partition_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_problem(&mut rng, 608, 3);
        let shards = partition(&p, 10).unwrap();
        let sizes: Vec<usize> = shards.iter().map(|s| s.rows()).collect();
        assert_eq!(sizes, vec![60, 60, 60, 60, 60, 60, 60, 60, 60, 68]);
        assert_eq!(shards[0].agent_id, 1);
        assert_eq!(shards[9].agent_id, 10);

        let p = random_problem(&mut rng, 4, 2);
        let shards = partition(&p, 1).unwrap();
        assert_eq!(shards.len(), 1);
        assert_eq!(shards[0].a, p.a);

        let p = random_problem(&mut rng, 5, 2);
        let sizes: Vec<usize> = partition(&p, 2).unwrap().iter().map(|s| s.rows()).collect();
        assert_eq!(sizes, vec![2, 3]);

        assert!(partition(&p, 6).is_err());
        assert!(partition(&p, 0).is_err());
    }

    #[test]
    fn restacking_reproduces_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_problem(&mut rng, 23, 4);
        let shards = partition(&p, 5).unwrap();
        let blocks: Vec<&DenseMatrix> = shards.iter().map(|s| &s.a).collect();
        assert_eq!(DenseMatrix::vstack(&blocks).unwrap(), p.a);
        let b: Vec<f64> = shards.iter().flat_map(|s| s.b.iter().copied()).collect();
        assert_eq!(b, p.b.to_vec());

        let g = gram(&p.a).unwrap();
        let mut sum = DenseMatrix::zeros(4, 4);
        for s in &shards {
            sum = sum.add(&gram(&s.a).unwrap());
        }
        assert!(g.sub(&sum).frobenius_norm() <= 1e-10 * g.frobenius_norm());
    }

    #[test]
    fn quadratic_mapping_hand_case() {
        let s = AgentShard::new(
            1,
            DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]),
            Vector::from_slice(&[2.0, 1.0]),
        )
        .unwrap();
        let q = lsq_to_quadratic(&s);
        assert_eq!(q.p, DenseMatrix::from_diag(&[4.0, 1.0]));
        assert_eq!(&*q.q, &[4.0, 1.0]);
        assert_eq!(q.r, 2.5);

        let z =
            AgentShard::new(2, DenseMatrix::zeros(2, 3), Vector::from_slice(&[3.0, 4.0])).unwrap();
        let q = lsq_to_quadratic(&z);
        assert_eq!(q.p, DenseMatrix::zeros(3, 3));
        assert_eq!(&*q.q, &[0.0, 0.0, 0.0]);
        assert_eq!(q.r, 12.5);
    }

    #[test]
    fn quadratic_mapping_preserves_cost_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_problem(&mut rng, 6, 4);
        let s = AgentShard::new(1, p.a.clone(), p.b.clone()).unwrap();
        let q = lsq_to_quadratic(&s);
        for _ in 0..10 {
            let x: Vector = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lsq = p.cost(&x);
            assert!((q.cost(&x) - lsq).abs() <= 1e-9 * lsq.abs().max(1e-300));
            let g1 = q.p.mul_vec(&x).sub(&q.q);
            let g2 = p.gradient(&x);
            assert!(g1.distance(&g2) <= 1e-12 * g2.norm().max(1.0));
        }
    }

    #[test]
    fn quadratic_shard_validation() {
        let bad = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(QuadraticShard::new(1, bad, Vector::zeros(2), 0.0).is_err());
        let ok = QuadraticShard::new(1, DenseMatrix::identity(2), Vector::zeros(2), 0.0).unwrap();
        assert!(check_quadratic_convexity(&[ok.clone()]).is_ok());
        let neg = QuadraticShard::new(
            2,
            DenseMatrix::identity(2).scaled(-2.0),
            Vector::zeros(2),
            0.0,
        )
        .unwrap();
        assert!(check_quadratic_convexity(&[ok, neg]).is_err());
    }
}
