//! Synchronous server–agent rounds and the noise channels applied to the
//! server's iterated variables.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::problem::{partition, AgentShard, LeastSquaresProblem, QuadraticShard};

/// Perturbation model for iterated variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseChannel {
    None,
    /// Round every entry to `k` decimal places, ties away from zero.
    RoundDecimals(u32),
    /// Add an independent draw from `[lo, hi)` to every entry.
    AdditiveUniform {
        lo: f64,
        hi: f64,
        seed: u64,
    },
}

impl NoiseChannel {
    pub fn is_none(&self) -> bool {
        matches!(self, NoiseChannel::None)
    }

    /// Per-vector norm bound `w` for a `dim`-entry variable.
    pub fn norm_bound(&self, dim: usize) -> f64 {
        let root = (dim as f64).sqrt();
        match *self {
            NoiseChannel::None => 0.0,
            NoiseChannel::RoundDecimals(k) => 0.5 * 10f64.powi(-(k as i32)) * root,
            NoiseChannel::AdditiveUniform { lo, hi, .. } => lo.abs().max(hi.abs()) * root,
        }
    }

    fn validate(&self) -> Result<()> {
        if let NoiseChannel::AdditiveUniform { lo, hi, .. } = *self {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "uniform noise needs lo ≤ hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for NoiseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseChannel::None => write!(f, "none"),
            NoiseChannel::RoundDecimals(k) => write!(f, "round:{k}"),
            NoiseChannel::AdditiveUniform { lo, hi, seed } => write!(f, "uniform:{lo},{hi},{seed}"),
        }
    }
}

impl FromStr for NoiseChannel {
    type Err = Error;

    /// `none`, `round:K` or `uniform:LO,HI[,SEED]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad noise spec `{s}`"));
        if s == "none" {
            return Ok(NoiseChannel::None);
        }
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let c = match kind {
            "round" => NoiseChannel::RoundDecimals(args.trim().parse().map_err(|_| bad())?),
            "uniform" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 2 && parts.len() != 3 {
                    return Err(bad());
                }
                let lo = parts[0].parse().map_err(|_| bad())?;
                let hi = parts[1].parse().map_err(|_| bad())?;
                let seed = match parts.get(2) {
                    Some(p) => p.parse().map_err(|_| bad())?,
                    None => 0,
                };
                NoiseChannel::AdditiveUniform { lo, hi, seed }
            }
            _ => return Err(bad()),
        };
        c.validate()?;
        Ok(c)
    }
}

/// A channel together with its random stream.
#[derive(Clone, Debug)]
pub struct Noise {
    channel: NoiseChannel,
    rng: Option<ChaCha8Rng>,
}

impl Noise {
    pub fn new(channel: NoiseChannel) -> Result<Self> {
        channel.validate()?;
        let rng = match channel {
            NoiseChannel::AdditiveUniform { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Ok(Noise { channel, rng })
    }

    pub fn none() -> Self {
        Noise {
            channel: NoiseChannel::None,
            rng: None,
        }
    }

    pub fn channel(&self) -> NoiseChannel {
        self.channel
    }

    pub fn is_none(&self) -> bool {
        self.channel.is_none()
    }

    /// Perturbs `v` in place, entries in ascending order.
    pub fn apply(&mut self, v: &mut [f64]) {
        match self.channel {
            NoiseChannel::None => {}
            NoiseChannel::RoundDecimals(k) => {
                let scale = 10f64.powi(k as i32);
                for x in v.iter_mut() {
                    *x = (*x * scale).round() / scale;
                }
            }
            NoiseChannel::AdditiveUniform { lo, hi, .. } => {
                let rng = self.rng.as_mut().expect("uniform channel carries a stream");
                for x in v.iter_mut() {
                    *x += if lo < hi {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    };
                }
            }
        }
    }

    /// Perturbs a matrix column by column.
    pub fn apply_columns(&mut self, k: &mut DenseMatrix) {
        if self.is_none() {
            return;
        }
        if let NoiseChannel::RoundDecimals(_) = self.channel {
            // Order is irrelevant for a deterministic map.
            self.apply(k.as_mut_slice());
            return;
        }
        for j in 0..k.cols() {
            let mut col = k.col(j);
            self.apply(&mut col);
            k.set_col(j, &col);
        }
    }
}

/// Returns a perturbed copy of `v`.
pub fn apply_noise(noise: &mut Noise, v: &[f64]) -> Vector {
    let mut out = Vector::from_slice(v);
    noise.apply(&mut out);
    out
}

/// Data held by one agent.
#[derive(Clone, Debug)]
pub enum Shard {
    LeastSquares(AgentShard),
    Quadratic(QuadraticShard),
}

impl Shard {
    pub fn agent_id(&self) -> usize {
        match self {
            Shard::LeastSquares(s) => s.agent_id,
            Shard::Quadratic(q) => q.agent_id,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shard::LeastSquares(s) => s.dim(),
            Shard::Quadratic(q) => q.dim(),
        }
    }

    /// Local gradient `gⁱ(x)`.
    pub fn gradient(&self, x: &[f64]) -> Vector {
        match self {
            Shard::LeastSquares(s) => {
                let p = s.packed();
                let r = p.mul_vec(x).sub(&s.b);
                p.tr_mul_vec(&r)
            }
            Shard::Quadratic(q) => q.p.mul_vec(x).sub(&q.q),
        }
    }

    /// Local cost `Fⁱ(x)`.
    pub fn cost(&self, x: &[f64]) -> f64 {
        match self {
            Shard::LeastSquares(s) => {
                let r = s.packed().mul_vec(x).sub(&s.b);
                0.5 * r.dot(&r)
            }
            Shard::Quadratic(q) => q.cost(x),
        }
    }

    /// Matrix whose column `j` is `Rⁱⱼ = (Hⁱ + (β/m)I)·kⱼ − eⱼ/m`, with `Hⁱ`
    /// the local Hessian. For least-squares shards `Hⁱ·K` is formed as
    /// `Aⁱᵀ(Aⁱ K)`, never building `AⁱᵀAⁱ`.
    pub fn precond_residual(&self, k: &DenseMatrix, beta: f64, m: usize) -> DenseMatrix {
        let mut r = DenseMatrix::zeros(k.rows(), k.cols());
        self.add_precond_residual(&self.local_product(k), k, beta, m, &mut r);
        r
    }

    /// `Aⁱ K` for least-squares shards, `Pⁱ K` for quadratic ones.
    pub fn local_product(&self, k: &DenseMatrix) -> DenseMatrix {
        match self {
            Shard::LeastSquares(s) => s.packed().mul_mat(k),
            Shard::Quadratic(q) => q.p.matmul(k),
        }
    }

    /// `acc += Rⁱ`, given `prod` from [`local_product`](Self::local_product).
    pub fn add_precond_residual(
        &self,
        prod: &DenseMatrix,
        k: &DenseMatrix,
        beta: f64,
        m: usize,
        acc: &mut DenseMatrix,
    ) {
        match self {
            Shard::LeastSquares(s) => s.packed().tr_mul_mat_add(prod, acc),
            Shard::Quadratic(_) => acc.axpy(1.0, prod),
        }
        let inv_m = 1.0 / m as f64;
        if beta != 0.0 {
            acc.axpy(beta * inv_m, k);
        }
        acc.add_diag(-inv_m);
    }

    /// Least-squares data, when this is such a shard.
    pub fn least_squares(&self) -> Option<&AgentShard> {
        match self {
            Shard::LeastSquares(s) => Some(s),
            Shard::Quadratic(_) => None,
        }
    }
}

/// One agent's IPG reply: `gⁱ` and all `Rⁱⱼ` bundled.
#[derive(Clone, Debug)]
pub struct IpgReply {
    pub g: Vector,
    pub r: DenseMatrix,
}

/// `(gⁱ, Rⁱ)` for one agent given the broadcast `(x, K)`.
pub fn ipg_agent_compute(
    shard: &Shard,
    x: &[f64],
    k: &DenseMatrix,
    beta: f64,
    m: usize,
) -> Result<IpgReply> {
    let d = shard.dim();
    if x.len() != d || k.shape() != (d, d) {
        return Err(Error::Dimension(format!(
            "agent {}: x has {} entries and K is {:?}, expected d = {d}",
            shard.agent_id(),
            x.len(),
            k.shape()
        )));
    }
    Ok(IpgReply {
        g: shard.gradient(x),
        r: shard.precond_residual(k, beta, m),
    })
}

/// Below this many multiply-adds per round agents are evaluated inline.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 16;

/// Drives synchronous rounds over a fixed set of agents.
///
/// Agent replies may be computed concurrently but are always reduced by a
/// left fold in ascending `agent_id`, so results do not depend on scheduling.
#[derive(Clone, Debug)]
pub struct RoundEngine {
    shards: Vec<Shard>,
    dim: usize,
    rows: usize,
    noise: Noise,
    round: usize,
    broadcasts: usize,
    parallel: bool,
}

impl RoundEngine {
    pub fn new(shards: Vec<Shard>, noise: Noise) -> Result<Self> {
        let first = shards.first().ok_or(Error::Empty("agent shards"))?;
        let dim = first.dim();
        for (pos, s) in shards.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::Dimension(format!(
                    "agent {} has d = {}, expected {dim}",
                    s.agent_id(),
                    s.dim()
                )));
            }
            if pos > 0 && s.agent_id() <= shards[pos - 1].agent_id() {
                return Err(Error::InvalidParameter(
                    "agent ids must be strictly ascending".into(),
                ));
            }
        }
        let rows = shards
            .iter()
            .map(|s| match s {
                Shard::LeastSquares(a) => a.rows(),
                Shard::Quadratic(q) => q.dim(),
            })
            .sum::<usize>();
        let parallel = shards.len() > 1 && rows * dim * dim >= PARALLEL_WORK_THRESHOLD;
        Ok(RoundEngine {
            shards,
            dim,
            rows,
            noise,
            round: 0,
            broadcasts: 0,
            parallel,
        })
    }

    /// Splits `p` across `m` agents.
    pub fn from_problem(p: &LeastSquaresProblem, m: usize, noise: Noise) -> Result<Self> {
        let shards = partition(p, m)?
            .into_iter()
            .map(Shard::LeastSquares)
            .collect();
        Self::new(shards, noise)
    }

    pub fn from_quadratic(shards: Vec<QuadraticShard>, noise: Noise) -> Result<Self> {
        crate::problem::check_quadratic_convexity(&shards)?;
        Self::new(shards.into_iter().map(Shard::Quadratic).collect(), noise)
    }

    /// Forces inline (`false`) or rayon (`true`) agent evaluation.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn agents(&self) -> usize {
        self.shards.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Round counter `t`.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Number of broadcast/reply exchanges so far, including the extra
    /// exchanges some solvers need within one round.
    pub fn broadcasts(&self) -> usize {
        self.broadcasts
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    pub fn noise_mut(&mut self) -> &mut Noise {
        &mut self.noise
    }

    pub fn replace_noise(&mut self, noise: Noise) {
        self.noise = noise;
    }

    /// Marks the end of a round.
    pub fn complete_round(&mut self) {
        self.round += 1;
    }

    /// Evaluates `f` on every agent; replies come back in agent order.
    pub fn gather<T, F>(&mut self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Shard) -> T + Sync + Send,
    {
        self.broadcasts += 1;
        if self.parallel {
            self.shards.par_iter().map(f).collect()
        } else {
            self.shards.iter().map(f).collect()
        }
    }

    /// As [`gather`](Self::gather) with the agent's position passed along.
    pub fn gather_indexed<T, F>(&mut self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &Shard) -> T + Sync + Send,
    {
        self.broadcasts += 1;
        if self.parallel {
            self.shards
                .par_iter()
                .enumerate()
                .map(|(i, s)| f(i, s))
                .collect()
        } else {
            self.shards
                .iter()
                .enumerate()
                .map(|(i, s)| f(i, s))
                .collect()
        }
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "broadcast x has {} entries, d = {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `Σᵢ gⁱ(x)`.
    pub fn gradient(&mut self, x: &[f64]) -> Result<Vector> {
        self.check_x(x)?;
        let replies = self.gather(|s| s.gradient(x));
        Ok(reduce_vectors(self.dim, replies))
    }

    /// `Σᵢ Fⁱ(x)`.
    pub fn cost(&mut self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(self
            .gather(|s| s.cost(x))
            .into_iter()
            .fold(0.0, |acc, c| acc + c))
    }

    /// One IPG exchange: returns `(Σ gⁱ, Σ Rⁱ)`.
    pub fn ipg_exchange(
        &mut self,
        x: &[f64],
        k: &DenseMatrix,
        beta: f64,
    ) -> Result<(Vector, DenseMatrix)> {
        let mut sum_r = DenseMatrix::zeros(self.dim, self.dim);
        let sum_g = self.ipg_exchange_into(x, k, beta, &mut sum_r)?;
        Ok((sum_g, sum_r))
    }

    /// As [`ipg_exchange`](Self::ipg_exchange), writing `Σ Rⁱ` into `sum_r`.
    /// Agents run concurrently; their replies are summed in agent order.
    pub fn ipg_exchange_into(
        &mut self,
        x: &[f64],
        k: &DenseMatrix,
        beta: f64,
        sum_r: &mut DenseMatrix,
    ) -> Result<Vector> {
        self.check_x(x)?;
        self.check_k(k)?;
        let replies = self.gather(|s| (s.gradient(x), s.local_product(k)));
        let m = self.agents();
        let mut sum_g = Vector::zeros(self.dim);
        reset(sum_r, self.dim);
        for (shard, (g, prod)) in self.shards.iter().zip(&replies) {
            sum_g.axpy(1.0, g);
            shard.add_precond_residual(prod, k, beta, m, sum_r);
        }
        Ok(sum_g)
    }

    /// Only the `Σ Rⁱ` half of the IPG reply.
    pub fn precond_exchange(&mut self, k: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
        let mut sum_r = DenseMatrix::zeros(self.dim, self.dim);
        self.precond_exchange_into(k, beta, &mut sum_r)?;
        Ok(sum_r)
    }

    pub fn precond_exchange_into(
        &mut self,
        k: &DenseMatrix,
        beta: f64,
        sum_r: &mut DenseMatrix,
    ) -> Result<()> {
        self.check_k(k)?;
        let replies = self.gather(|s| s.local_product(k));
        let m = self.agents();
        reset(sum_r, self.dim);
        for (shard, prod) in self.shards.iter().zip(&replies) {
            shard.add_precond_residual(prod, k, beta, m, sum_r);
        }
        Ok(())
    }

    fn check_k(&self, k: &DenseMatrix) -> Result<()> {
        if k.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!(
                "K is {:?}, d = {}",
                k.shape(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Total number of data rows (or `d` per quadratic agent).
    pub fn total_rows(&self) -> usize {
        self.rows
    }
}

fn reset(m: &mut DenseMatrix, d: usize) {
    if m.shape() == (d, d) {
        m.as_mut_slice().fill(0.0);
    } else {
        *m = DenseMatrix::zeros(d, d);
    }
}

fn reduce_vectors(dim: usize, replies: Vec<Vector>) -> Vector {
    let mut acc = Vector::zeros(dim);
    for r in replies {
        acc.axpy(1.0, &r);
    }
    acc
}
