use crate::error::{Error, Result};
use crate::linalg::{row_gram_cholesky, Cholesky, DenseMatrix, PackedRows, Vector};
use crate::protocol::{RoundEngine, Shard};

/// Which local estimates the server averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApcAverage {
    /// The locals the agents just computed, `xⁱ(t+1)`.
    Updated,
    /// The locals from before this round's update, `xⁱ(t)`.
    Received,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApcParams {
    /// Local relaxation, `0 ≤ γ ≤ 2`.
    pub gamma: f64,
    /// Global mixing weight.
    pub eta: f64,
    pub average: ApcAverage,
}

impl ApcParams {
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&gamma) || !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "APC needs 0 ≤ γ ≤ 2 and η ≥ 0 (got γ={gamma}, η={eta})"
            )));
        }
        Ok(ApcParams {
            gamma,
            eta,
            average: ApcAverage::Updated,
        })
    }

    pub fn with_average(mut self, average: ApcAverage) -> Self {
        self.average = average;
        self
    }
}

/// Nullspace projector `Pⁱ = I − Aⁱᵀ(AⁱAⁱᵀ)⁻¹Aⁱ` kept in factored form.
#[derive(Clone, Debug)]
pub struct Projector {
    a: PackedRows,
    chol: Cholesky,
}

impl Projector {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let chol = row_gram_cholesky(a).map_err(|e| Error::Inapplicable {
            solver: "APC",
            reason: format!("local data matrix is not full row rank ({e})"),
        })?;
        Ok(Projector {
            a: PackedRows::from_dense(a),
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `Pⁱ v`
    pub fn apply(&self, v: &[f64]) -> Vector {
        let y = self.chol.solve(&self.a.mul_vec(v));
        Vector::from_slice(v).sub(&self.a.tr_mul_vec(&y))
    }

    /// `Pⁱ` as an explicit matrix.
    pub fn dense(&self) -> DenseMatrix {
        let d = self.dim();
        let mut p = DenseMatrix::zeros(d, d);
        for j in 0..d {
            p.set_col(j, &self.apply(&Vector::unit(d, j)));
        }
        p.symmetrize();
        p
    }

    /// Minimum-norm solution of `Aⁱ x = b`.
    pub fn min_norm(&self, b: &[f64]) -> Vector {
        self.a.tr_mul_vec(&self.chol.solve(b))
    }
}

#[derive(Clone, Debug)]
pub struct ApcState {
    pub x_global: Vector,
    pub x_local: Vec<Vector>,
    pub projections: Vec<Projector>,
    pub gamma: f64,
    pub eta_apc: f64,
    pub average: ApcAverage,
}

/// Local min-norm starts and their average. Every shard must be a
/// least-squares shard with full row rank.
pub fn apc_init(shards: &[Shard], params: ApcParams) -> Result<ApcState> {
    if shards.is_empty() {
        return Err(Error::Empty("APC shards"));
    }
    let mut projections = Vec::with_capacity(shards.len());
    let mut x_local = Vec::with_capacity(shards.len());
    for s in shards {
        let ls = s.least_squares().ok_or_else(|| Error::Inapplicable {
            solver: "APC",
            reason: "needs the raw local equations, not a quadratic shard".into(),
        })?;
        let proj = Projector::new(&ls.a)?;
        x_local.push(proj.min_norm(&ls.b));
        projections.push(proj);
    }
    let d = x_local[0].len();
    let mut x_global = Vector::zeros(d);
    for xi in &x_local {
        x_global.axpy(1.0, xi);
    }
    let x_global = x_global.scaled(1.0 / shards.len() as f64);
    Ok(ApcState {
        x_global,
        x_local,
        projections,
        gamma: params.gamma,
        eta_apc: params.eta,
        average: params.average,
    })
}

impl ApcState {
    pub fn step(&mut self, engine: &mut RoundEngine) -> Result<()> {
        let m = self.x_local.len();
        if m != engine.agents() {
            return Err(Error::Dimension(format!(
                "APC state for {m} agents, engine has {}",
                engine.agents()
            )));
        }
        let x = &self.x_global;
        let gamma = self.gamma;
        let projections = &self.projections;
        let locals = &self.x_local;
        // Shard data is already cached in the projectors.
        let updated: Vec<Vector> = engine.gather_indexed(|i, _| {
            let diff = x.sub(&locals[i]);
            let mut xi = locals[i].clone();
            xi.axpy(gamma, &projections[i].apply(&diff));
            xi
        });

        let previous = std::mem::replace(&mut self.x_local, updated);
        for xi in self.x_local.iter_mut() {
            engine.noise_mut().apply(xi);
        }
        let averaged = match self.average {
            ApcAverage::Updated => &self.x_local,
            ApcAverage::Received => &previous,
        };
        let mut sum = Vector::zeros(x.len());
        for xi in averaged {
            sum.axpy(1.0, xi);
        }
        let mut next = sum.scaled(self.eta_apc / m as f64);
        next.axpy(1.0 - self.eta_apc, &self.x_global);
        engine.noise_mut().apply(&mut next);
        self.x_global = next;
        engine.complete_round();
        Ok(())
    }
}

/// Parameters minimizing the APC rate for the given local projectors.
///
/// With `X = I − mean(Pⁱ)` having extreme eigenvalues `μmin, μmax`, the
/// optimum satisfies `γ + η − γη·μmin = (1−√q)²/μmin + 1 − q` and
/// `γη = (1−√q)²/μmin`, with `√q = (√κ−1)/(√κ+1)` and `κ = μmax/μmin`.
pub fn tune_apc(projections: &[Projector]) -> Result<ApcParams> {
    let first = projections.first().ok_or(Error::Empty("APC projectors"))?;
    let d = first.dim();
    let m = projections.len() as f64;
    let mut x = DenseMatrix::identity(d);
    for p in projections {
        x.axpy(-1.0 / m, &p.dense());
    }
    x.symmetrize();
    let eig = crate::linalg::symmetric_eigen(&x, false)?;
    let mu_min = eig.values[0];
    let mu_max = *eig.values.last().unwrap();
    if !(mu_min > 1e-14 * mu_max) {
        return Err(Error::Inapplicable {
            solver: "APC",
            reason: "stacked local equations do not pin down a unique solution".into(),
        });
    }
    let kappa = mu_max / mu_min;
    let sq = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let q = sq * sq;
    let product = (1.0 - sq).powi(2) / mu_min;
    let sum = product + 1.0 - q;
    let disc = (sum * sum - 4.0 * product).max(0.0).sqrt();
    let gamma = (sum - disc) / 2.0;
    let eta = (sum + disc) / 2.0;
    ApcParams::new(gamma.min(2.0), eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::row_space_projection;
    use crate::problem::{AgentShard, LeastSquaresProblem};
    use crate::protocol::Noise;

    fn shards(rows: &[(&[f64], f64)]) -> Vec<Shard> {
        rows.iter()
            .enumerate()
            .map(|(i, (a, b))| {
                Shard::LeastSquares(
                    AgentShard::new(
                        i + 1,
                        DenseMatrix::from_rows(&[*a]),
                        Vector::from_slice(&[*b]),
                    )
                    .unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn init_hand_case() {
        let s = shards(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let st = apc_init(&s, ApcParams::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(&*st.x_local[0], &[1.0, 0.0]);
        assert_eq!(&*st.x_local[1], &[0.0, 1.0]);
        assert_eq!(&*st.x_global, &[0.5, 0.5]);

        let mut e = RoundEngine::new(s, Noise::none()).unwrap();
        let mut st = st;
        st.step(&mut e).unwrap();
        assert!(st.x_local[0].distance(&[1.0, 0.5]) < 1e-15);
    }

    #[test]
    fn init_square_and_rank_failure() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let p = LeastSquaresProblem::with_ones_solution("sq", a.clone());
        let s = vec![Shard::LeastSquares(
            AgentShard::new(1, a, p.b.clone()).unwrap(),
        )];
        let st = apc_init(&s, ApcParams::new(1.0, 1.0).unwrap()).unwrap();
        assert!(st.x_global.distance(&[1.0, 1.0]) < 1e-14);

        let dup = DenseMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]);
        let s = vec![Shard::LeastSquares(
            AgentShard::new(1, dup, Vector::from_slice(&[1.0, 1.0])).unwrap(),
        )];
        assert!(matches!(
            apc_init(&s, ApcParams::new(1.0, 1.0).unwrap()),
            Err(Error::Inapplicable { .. })
        ));
    }

    #[test]
    fn zero_parameters_freeze_state() {
        let s = shards(&[(&[1.0, 2.0], 1.0), (&[0.5, -1.0], 2.0)]);
        let mut st = apc_init(&s, ApcParams::new(0.0, 0.0).unwrap()).unwrap();
        let before = (st.x_global.clone(), st.x_local.clone());
        let mut e = RoundEngine::new(s, Noise::none()).unwrap();
        st.step(&mut e).unwrap();
        assert_eq!(st.x_global, before.0);
        assert_eq!(st.x_local, before.1);
    }

    #[test]
    fn projector_matches_explicit_formula() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.5, 0.0, 3.0, 1.0]]);
        let p = Projector::new(&a).unwrap();
        assert!(p.dense().sub(&row_space_projection(&a).unwrap()).max_abs() < 1e-14);
    }

    #[test]
    fn tuned_run_converges_on_small_system() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, -1.0], [0.5, 3.0], [1.0, 1.0]]);
        let p = LeastSquaresProblem::with_ones_solution("c", a);
        let mut e = RoundEngine::from_problem(&p, 4, Noise::none()).unwrap();
        let probe = apc_init(e.shards(), ApcParams::new(1.0, 1.0).unwrap()).unwrap();
        let params = tune_apc(&probe.projections).unwrap();
        let mut st = apc_init(e.shards(), params).unwrap();
        for _ in 0..200 {
            st.step(&mut e).unwrap();
        }
        let err = st.x_global.distance(&[1.0, 1.0]) / 2f64.sqrt();
        assert!(err <= 1e-6, "{err}");
    }
}
