//! The pre-conditioned method and its five baselines as server-side state
//! machines over a [`RoundEngine`], plus parameter tuning and a run driver.

mod apc;
mod bfgs;
mod ipg;
mod momentum;
mod tune;

use std::fmt;
use std::str::FromStr;

pub use apc::{apc_init, tune_apc, ApcAverage, ApcParams, ApcState, Projector};
pub use bfgs::{bfgs_update, BfgsState, LineSearch, MAX_CONDITION};
pub use ipg::{ipg_server_update, ipg_server_update_noisy, IpgParams, IpgState};
pub use momentum::{gd_step, hbm_step, nag_step, GdState, MomentumState};
pub use tune::{nag_textbook, tune, tune_ipg};

pub use crate::protocol::ipg_agent_compute;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_distance, DenseMatrix, Vector};
use crate::protocol::{RoundEngine, Shard};

/// Solver identifiers, in the order used for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Ipg,
    Gd,
    Nag,
    Hbm,
    Apc,
    Bfgs,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Ipg,
        SolverKind::Gd,
        SolverKind::Nag,
        SolverKind::Hbm,
        SolverKind::Apc,
        SolverKind::Bfgs,
    ];

    /// Lower-case id used in file names and on the command line.
    pub fn id(&self) -> &'static str {
        match self {
            SolverKind::Ipg => "ipg",
            SolverKind::Gd => "gd",
            SolverKind::Nag => "nag",
            SolverKind::Hbm => "hbm",
            SolverKind::Apc => "apc",
            SolverKind::Bfgs => "bfgs",
        }
    }

    /// Parses a comma-separated list; `all` expands to every solver.
    pub fn parse_list(text: &str) -> Result<Vec<SolverKind>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(SolverKind::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("solver list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id().to_ascii_uppercase())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown solver `{s}`")))
    }
}

/// Parameters for one solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverParams {
    Ipg(IpgParams),
    Gd { delta: f64 },
    Nag { delta: f64, eta: f64 },
    Hbm { delta: f64, eta: f64 },
    Apc(ApcParams),
    Bfgs(LineSearch),
}

impl SolverParams {
    pub fn kind(&self) -> SolverKind {
        match self {
            SolverParams::Ipg(_) => SolverKind::Ipg,
            SolverParams::Gd { .. } => SolverKind::Gd,
            SolverParams::Nag { .. } => SolverKind::Nag,
            SolverParams::Hbm { .. } => SolverKind::Hbm,
            SolverParams::Apc(_) => SolverKind::Apc,
            SolverParams::Bfgs(_) => SolverKind::Bfgs,
        }
    }
}

impl fmt::Display for SolverParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverParams::Ipg(p) => write!(f, "alpha={} delta={} beta={}", p.alpha, p.delta, p.beta),
            SolverParams::Gd { delta } => write!(f, "delta={delta}"),
            SolverParams::Nag { delta, eta } | SolverParams::Hbm { delta, eta } => {
                write!(f, "delta={delta} eta={eta}")
            }
            SolverParams::Apc(p) => write!(f, "gamma={} eta={}", p.gamma, p.eta),
            SolverParams::Bfgs(LineSearch::Backtracking { armijo_c, shrink, initial_step, max_reductions }) => write!(
                f,
                "armijo_c={armijo_c} shrink={shrink} initial_step={initial_step} max_reductions={max_reductions}"
            ),
            SolverParams::Bfgs(LineSearch::Exact) => write!(f, "exact_line_search"),
        }
    }
}

/// Server-side state of any solver.
#[derive(Clone, Debug)]
pub enum SolverState {
    Ipg(IpgState),
    Gd(GdState),
    Nag(MomentumState),
    Hbm(MomentumState),
    Apc(ApcState),
    Bfgs(BfgsState),
}

impl SolverState {
    /// Default start: zeros everywhere, `M(0) = I`, APC from local
    /// minimum-norm solutions.
    pub fn init(params: &SolverParams, engine: &RoundEngine) -> Result<Self> {
        let d = engine.dim();
        Ok(match *params {
            SolverParams::Ipg(p) => SolverState::Ipg(IpgState::new(d, p)),
            SolverParams::Gd { delta } => SolverState::Gd(GdState::new(d, delta)),
            SolverParams::Nag { delta, eta } => SolverState::Nag(MomentumState::new(d, delta, eta)),
            SolverParams::Hbm { delta, eta } => SolverState::Hbm(MomentumState::new(d, delta, eta)),
            SolverParams::Apc(p) => SolverState::Apc(apc_init(engine.shards(), p)?),
            SolverParams::Bfgs(ls) => SolverState::Bfgs(BfgsState::new(d, ls)),
        })
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            SolverState::Ipg(_) => SolverKind::Ipg,
            SolverState::Gd(_) => SolverKind::Gd,
            SolverState::Nag(_) => SolverKind::Nag,
            SolverState::Hbm(_) => SolverKind::Hbm,
            SolverState::Apc(_) => SolverKind::Apc,
            SolverState::Bfgs(_) => SolverKind::Bfgs,
        }
    }

    /// Current estimate `x(t)`.
    pub fn x(&self) -> &Vector {
        match self {
            SolverState::Ipg(s) => &s.x,
            SolverState::Gd(s) => &s.x,
            SolverState::Nag(s) | SolverState::Hbm(s) => &s.x,
            SolverState::Apc(s) => &s.x_global,
            SolverState::Bfgs(s) => &s.x,
        }
    }

    /// `K(t)` for the pre-conditioned method.
    pub fn preconditioner(&self) -> Option<&DenseMatrix> {
        match self {
            SolverState::Ipg(s) => Some(&s.k),
            _ => None,
        }
    }

    /// One round. `g` may carry `Σ gⁱ(x(t))` if the caller already has it.
    /// Returns the gradient at the new iterate when the round produced it.
    pub fn step(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<Option<Vector>> {
        match self {
            SolverState::Ipg(s) => s.step(engine, g).map(|_| None),
            SolverState::Gd(s) => s.step(engine, g).map(|_| None),
            SolverState::Nag(s) => s.nag_round(engine, g).map(|_| None),
            SolverState::Hbm(s) => s.hbm_round(engine, g).map(|_| None),
            SolverState::Apc(s) => s.step(engine).map(|_| None),
            SolverState::Bfgs(s) => s.step(engine, g).map(Some),
        }
    }
}

/// Executes one synchronous round of `state` on `engine`.
pub fn run_round(state: &mut SolverState, engine: &mut RoundEngine) -> Result<()> {
    state.step(engine, None).map(|_| ())
}

/// `(gⁱ, Rⁱ)` for a quadratic agent; identical in form to the
/// least-squares reply.
pub fn quadratic_agent_compute(
    shard: &crate::problem::QuadraticShard,
    x: &[f64],
    k: &DenseMatrix,
    beta: f64,
    m: usize,
) -> Result<crate::protocol::IpgReply> {
    ipg_agent_compute(&Shard::Quadratic(shard.clone()), x, k, beta, m)
}

/// When to stop a run. Any criterion that fires ends it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StopCriteria {
    pub max_iters: Option<usize>,
    pub grad_eps: Option<f64>,
    pub rel_err_eps: Option<f64>,
    /// `(window, tol)`: the error trace varied by at most `tol` times its
    /// latest value over the last `window` iterations.
    pub stall: Option<(usize, f64)>,
}

impl StopCriteria {
    pub fn max_iters(mut self, k: usize) -> Self {
        self.max_iters = Some(k);
        self
    }

    pub fn grad_eps(mut self, eps: f64) -> Self {
        self.grad_eps = Some(eps);
        self
    }

    pub fn rel_err_eps(mut self, eps: f64) -> Self {
        self.rel_err_eps = Some(eps);
        self
    }

    pub fn stall(mut self, window: usize, tol: f64) -> Self {
        self.stall = Some((window, tol));
        self
    }

    fn is_empty(&self) -> bool {
        self.max_iters.is_none()
            && self.grad_eps.is_none()
            && self.rel_err_eps.is_none()
            && self.stall.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    MaxIters,
    GradTol,
    RelErrTol,
    Stalled,
    /// Iterates turned NaN or infinite at this iteration.
    Diverged {
        iteration: usize,
    },
    /// A round failed (singular `M`, line search exhausted, ...).
    Failed {
        iteration: usize,
        message: String,
    },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::MaxIters => write!(f, "max_iters"),
            StopReason::GradTol => write!(f, "grad_tol"),
            StopReason::RelErrTol => write!(f, "rel_err_tol"),
            StopReason::Stalled => write!(f, "stalled"),
            StopReason::Diverged { iteration } => write!(f, "diverged@{iteration}"),
            StopReason::Failed { iteration, message } => write!(f, "failed@{iteration}: {message}"),
        }
    }
}

/// Per-iteration traces of one run, indexed by `t = 0..=iterations`.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub params: SolverParams,
    pub grad_norm: Vec<f64>,
    /// `‖x(t) − x*‖ / ‖x*‖`; empty without a reference solution.
    pub rel_error: Vec<f64>,
    /// `‖K(t) − K_β‖_F`; empty unless a reference `K_β` was supplied.
    pub k_frob_dist: Vec<f64>,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub x_star_norm: Option<f64>,
    pub final_x: Vector,
}

impl RunRecord {
    /// `‖x(t) − x*‖`.
    pub fn abs_error(&self) -> Vec<f64> {
        let n = self.x_star_norm.unwrap_or(1.0);
        self.rel_error.iter().map(|e| e * n).collect()
    }

    pub fn diverged(&self) -> bool {
        matches!(
            self.stop_reason,
            StopReason::Diverged { .. } | StopReason::Failed { .. }
        )
    }
}

/// Optional references recorded alongside a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reference<'a> {
    pub x_star: Option<&'a Vector>,
    pub k_beta: Option<&'a DenseMatrix>,
}

/// Runs rounds until a stop criterion fires and returns the traces.
/// Divergence and failed rounds end the run with the partial record.
pub fn run_traced(
    state: &mut SolverState,
    engine: &mut RoundEngine,
    stop: &StopCriteria,
    reference: Reference<'_>,
) -> Result<RunRecord> {
    if stop.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one stop criterion must be set".into(),
        ));
    }
    let params = state.params();
    let x_star_norm = reference.x_star.map(|x| x.norm());
    let mut rec = RunRecord {
        solver: state.kind(),
        params,
        grad_norm: Vec::new(),
        rel_error: Vec::new(),
        k_frob_dist: Vec::new(),
        stop_reason: StopReason::MaxIters,
        iterations: 0,
        x_star_norm,
        final_x: state.x().clone(),
    };
    let record = |rec: &mut RunRecord, state: &SolverState, g: &Vector| -> Result<()> {
        rec.grad_norm.push(g.norm());
        if let Some(xs) = reference.x_star {
            let scale = x_star_norm.filter(|n| *n > 0.0).unwrap_or(1.0);
            rec.rel_error.push(state.x().distance(xs) / scale);
        }
        if let (Some(kb), Some(k)) = (reference.k_beta, state.preconditioner()) {
            rec.k_frob_dist.push(frobenius_distance(k, kb)?);
        }
        Ok(())
    };

    let mut g = engine.gradient(state.x())?;
    record(&mut rec, state, &g)?;
    let mut t = 0;
    loop {
        if let Some(reason) = check_stop(stop, &rec, t) {
            rec.stop_reason = reason;
            break;
        }
        let next = match state.step(engine, Some(&g)) {
            Ok(next) => next,
            Err(e) => {
                rec.stop_reason = StopReason::Failed {
                    iteration: t,
                    message: e.to_string(),
                };
                break;
            }
        };
        t += 1;
        g = match next {
            Some(g) => g,
            None => engine.gradient(state.x())?,
        };
        record(&mut rec, state, &g)?;
        rec.iterations = t;
        if !state.x().is_finite() || !g.is_finite() {
            rec.stop_reason = StopReason::Diverged { iteration: t };
            break;
        }
    }
    rec.iterations = t;
    rec.final_x = state.x().clone();
    Ok(rec)
}

/// As [`run_traced`], but a diverged or failed run is an error.
pub fn run_until(
    state: &mut SolverState,
    engine: &mut RoundEngine,
    stop: &StopCriteria,
    reference: Reference<'_>,
) -> Result<RunRecord> {
    let rec = run_traced(state, engine, stop, reference)?;
    match &rec.stop_reason {
        StopReason::Diverged { iteration } => Err(Error::Diverged {
            iteration: *iteration,
        }),
        StopReason::Failed { message, .. } => Err(Error::InvalidParameter(message.clone())),
        _ => Ok(rec),
    }
}

fn check_stop(stop: &StopCriteria, rec: &RunRecord, t: usize) -> Option<StopReason> {
    if let Some(eps) = stop.grad_eps {
        if rec.grad_norm[t] <= eps {
            return Some(StopReason::GradTol);
        }
    }
    if let (Some(eps), Some(e)) = (stop.rel_err_eps, rec.rel_error.get(t)) {
        if *e <= eps {
            return Some(StopReason::RelErrTol);
        }
    }
    if let Some((window, tol)) = stop.stall {
        let trace = if rec.rel_error.is_empty() {
            &rec.grad_norm
        } else {
            &rec.rel_error
        };
        if window > 0 && trace.len() > window {
            let tail = &trace[trace.len() - window - 1..];
            let (lo, hi) = tail
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                });
            if hi - lo <= tol * trace[t] {
                return Some(StopReason::Stalled);
            }
        }
    }
    if let Some(k) = stop.max_iters {
        if t >= k {
            return Some(StopReason::MaxIters);
        }
    }
    None
}

impl SolverState {
    /// Parameters the state is running with.
    pub fn params(&self) -> SolverParams {
        match self {
            SolverState::Ipg(s) => SolverParams::Ipg(s.params),
            SolverState::Gd(s) => SolverParams::Gd { delta: s.delta },
            SolverState::Nag(s) => SolverParams::Nag {
                delta: s.delta,
                eta: s.eta,
            },
            SolverState::Hbm(s) => SolverParams::Hbm {
                delta: s.delta,
                eta: s.eta,
            },
            SolverState::Apc(s) => SolverParams::Apc(ApcParams {
                gamma: s.gamma,
                eta: s.eta_apc,
                average: s.average,
            }),
            SolverState::Bfgs(s) => SolverParams::Bfgs(s.line_search),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, spectral_summary, DEFAULT_RANK_TOL};
    use crate::problem::{synthetic_problem, LeastSquaresProblem, SyntheticSpec};
    use crate::protocol::Noise;

    fn tuned(kind: SolverKind, p: &LeastSquaresProblem, e: &RoundEngine) -> SolverParams {
        let s = spectral_summary(&gram(&p.a).unwrap(), DEFAULT_RANK_TOL).unwrap();
        match kind {
            SolverKind::Apc => {
                let probe = apc_init(e.shards(), ApcParams::new(1.0, 1.0).unwrap()).unwrap();
                SolverParams::Apc(tune_apc(&probe.projections).unwrap())
            }
            k => tune(k, &s).unwrap(),
        }
    }

    #[test]
    fn zero_iterations_records_initial_state() {
        let p = synthetic_problem(&SyntheticSpec {
            n: 12,
            d: 4,
            kappa: 10.0,
            rank: 4,
            seed: 1,
        })
        .unwrap();
        let mut e = RoundEngine::from_problem(&p, 3, Noise::none()).unwrap();
        let params = tuned(SolverKind::Ipg, &p, &e);
        let mut st = SolverState::init(&params, &e).unwrap();
        let stop = StopCriteria::default().grad_eps(f64::INFINITY).max_iters(0);
        let rec = run_until(
            &mut st,
            &mut e,
            &stop,
            Reference {
                x_star: p.x_star.as_ref(),
                k_beta: None,
            },
        )
        .unwrap();
        assert_eq!(rec.iterations, 0);
        assert_eq!(rec.grad_norm.len(), 1);
        assert_eq!(rec.rel_error, vec![1.0]);
        assert!(run_until(
            &mut st,
            &mut e,
            &StopCriteria::default(),
            Reference::default()
        )
        .is_err());
    }

    #[test]
    fn every_solver_reaches_tolerance() {
        let p = synthetic_problem(&SyntheticSpec {
            n: 24,
            d: 6,
            kappa: 20.0,
            rank: 6,
            seed: 4,
        })
        .unwrap();
        for kind in SolverKind::ALL {
            // APC needs full-row-rank shards: 4 agents × 6 rows each is square.
            let mut e = RoundEngine::from_problem(&p, 4, Noise::none()).unwrap();
            let params = tuned(kind, &p, &e);
            let mut st = SolverState::init(&params, &e).unwrap();
            let stop = StopCriteria::default().rel_err_eps(1e-8).max_iters(5000);
            let rec = run_until(
                &mut st,
                &mut e,
                &stop,
                Reference {
                    x_star: p.x_star.as_ref(),
                    k_beta: None,
                },
            )
            .unwrap();
            assert_eq!(rec.stop_reason, StopReason::RelErrTol, "{kind}");
            assert_eq!(rec.grad_norm.len(), rec.iterations + 1);
            assert_eq!(rec.rel_error.len(), rec.iterations + 1);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = synthetic_problem(&SyntheticSpec {
            n: 30,
            d: 5,
            kappa: 50.0,
            rank: 5,
            seed: 8,
        })
        .unwrap();
        let go = || {
            let mut e = RoundEngine::from_problem(
                &p,
                3,
                Noise::new("uniform:0,1e-6,3".parse().unwrap()).unwrap(),
            )
            .unwrap();
            let params = tuned(SolverKind::Nag, &p, &e);
            let mut st = SolverState::init(&params, &e).unwrap();
            let stop = StopCriteria::default().max_iters(50);
            run_until(
                &mut st,
                &mut e,
                &stop,
                Reference {
                    x_star: p.x_star.as_ref(),
                    k_beta: None,
                },
            )
            .unwrap()
        };
        let (a, b) = (go(), go());
        assert_eq!(a.grad_norm, b.grad_norm);
        assert_eq!(a.rel_error, b.rel_error);
    }

    #[test]
    fn divergence_is_reported() {
        let p = synthetic_problem(&SyntheticSpec {
            n: 10,
            d: 3,
            kappa: 5.0,
            rank: 3,
            seed: 2,
        })
        .unwrap();
        let mut e = RoundEngine::from_problem(&p, 2, Noise::none()).unwrap();
        let mut st = SolverState::init(&SolverParams::Gd { delta: 10.0 }, &e).unwrap();
        let stop = StopCriteria::default().max_iters(100_000);
        let err = run_until(&mut st, &mut e, &stop, Reference::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn solver_list_parsing() {
        assert_eq!(
            SolverKind::parse_list("gd, IPG").unwrap(),
            vec![SolverKind::Ipg, SolverKind::Gd]
        );
        assert_eq!(SolverKind::parse_list("all").unwrap().len(), 6);
        assert!(SolverKind::parse_list("foo").is_err());
        assert!(SolverKind::parse_list("").is_err());
    }
}
