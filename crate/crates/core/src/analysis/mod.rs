//! Closed-form rates, bound checks, noise diagnostics and run metrics.

mod noise;

pub use noise::{column_distances, noise_diagnostics, NoiseReport};

use crate::error::{Error, Result};
use crate::linalg::SpectralSummary;
use crate::solvers::{RunRecord, SolverParams};

/// Rate quantities of the pre-conditioned method and plain gradient descent
/// for one parameter choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    /// Best achievable linear rate over `δ`.
    pub mu_star: f64,
    /// Best achievable `ρ` over `α`.
    pub varrho: f64,
    /// Optimally tuned gradient descent rate.
    pub mu_gd: f64,
    /// The `δ` attaining `mu_star`.
    pub delta_crit: f64,
    pub mu_of_delta: f64,
    pub rho_of_alpha: f64,
    pub beta: f64,
    pub alpha: f64,
    pub delta: f64,
    pub lambda1: f64,
    pub lambda_r: f64,
    pub lambda_d: f64,
}

/// `μ(δ) = max(|1 − δλ1/(λ1+β)|, |1 − δλr/(λr+β)|)`
pub fn mu_of_delta(lambda1: f64, lambda_r: f64, beta: f64, delta: f64) -> f64 {
    (1.0 - delta * lambda1 / (lambda1 + beta))
        .abs()
        .max((1.0 - delta * lambda_r / (lambda_r + beta)).abs())
}

/// `ρ(α) = max(|1 − α(λ1+β)|, |1 − α(λd+β)|)`
pub fn rho_of_alpha(lambda1: f64, lambda_d: f64, beta: f64, alpha: f64) -> f64 {
    (1.0 - alpha * (lambda1 + beta))
        .abs()
        .max((1.0 - alpha * (lambda_d + beta)).abs())
}

pub fn theoretical_rates(
    s: &SpectralSummary,
    beta: f64,
    alpha: f64,
    delta: f64,
) -> Result<RateReport> {
    let (l1, lr, ld) = (s.lambda1, s.lambda_r, s.lambda_d);
    if !(l1 > 0.0) {
        return Err(Error::InvalidParameter("λ1 must be positive".into()));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("β = {beta} < 0")));
    }
    // Written without the λ1λr/β term so that β = 0 is fine.
    let mu_star = beta * (l1 - lr) / (2.0 * l1 * lr + beta * (l1 + lr));
    Ok(RateReport {
        mu_star,
        varrho: (l1 - ld) / (l1 + ld + 2.0 * beta),
        mu_gd: (l1 - lr) / (l1 + lr),
        delta_crit: 2.0 / (l1 / (l1 + beta) + lr / (lr + beta)),
        mu_of_delta: mu_of_delta(l1, lr, beta, delta),
        rho_of_alpha: rho_of_alpha(l1, ld, beta, alpha),
        beta,
        alpha,
        delta,
        lambda1: l1,
        lambda_r: lr,
        lambda_d: ld,
    })
}

/// Outcome of checking a gradient trace against the per-iteration bound
/// `‖g(t+1)‖ ≤ (μ(δ) + δλ1‖K(0)−K_β‖_F ρ(α)^{t+1}) ‖g(t)‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    /// Bound factor for each step `t → t+1`.
    pub bounds: Vec<f64>,
    pub first_violation: Option<usize>,
    pub pass: bool,
}

/// Checks an IPG trace against the per-iteration bound, with slack
/// `1e-9‖g(0)‖` for rounding.
pub fn gradient_bound_check(
    run: &RunRecord,
    report: &RateReport,
    k0_dist: f64,
) -> Result<BoundCheck> {
    match run.params {
        SolverParams::Ipg(p)
            if p.alpha == report.alpha && p.delta == report.delta && p.beta == report.beta => {}
        _ => {
            return Err(Error::InvalidParameter(
                "bound check needs an IPG run with the report's α, δ and β".into(),
            ))
        }
    }
    if run.grad_norm.len() != run.iterations + 1 {
        return Err(Error::Dimension(format!(
            "trace has {} entries for {} iterations",
            run.grad_norm.len(),
            run.iterations
        )));
    }
    let g = &run.grad_norm;
    let slack = 1e-9 * g[0];
    let coeff = report.delta * report.lambda1 * k0_dist;
    let mut bounds = Vec::with_capacity(run.iterations);
    let mut first_violation = None;
    let mut rho_pow = report.rho_of_alpha;
    for t in 0..run.iterations {
        let b = report.mu_of_delta + coeff * rho_pow;
        rho_pow *= report.rho_of_alpha;
        if first_violation.is_none() && !(g[t + 1] <= b * g[t] + slack) {
            first_violation = Some(t);
        }
        bounds.push(b);
    }
    Ok(BoundCheck {
        bounds,
        pass: first_violation.is_none(),
        first_violation,
    })
}

/// Smallest `T` after which the IPG gradient norm stays strictly below the
/// GD one on every common iteration. `None` when IPG is not ahead at the
/// end of the common trace.
pub fn crossover_iteration(run_ipg: &RunRecord, run_gd: &RunRecord) -> Option<usize> {
    let n = run_ipg.grad_norm.len().min(run_gd.grad_norm.len());
    if n == 0 {
        return None;
    }
    let ahead = |t: usize| run_ipg.grad_norm[t] < run_gd.grad_norm[t];
    if !ahead(n - 1) {
        return None;
    }
    let last_behind = (0..n).rev().find(|&t| !ahead(t));
    Some(last_behind.unwrap_or(0))
}

/// Stalled error level of a run under persistent noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticError {
    /// `‖x(t) − x*‖` at the stall point.
    pub abs: f64,
    /// The same, relative to `‖x*‖`.
    pub rel: f64,
    /// Iteration at which the window first stalled, or the last one.
    pub at: usize,
    /// False when the trace never stalled; the values are then the last ones.
    pub converged: bool,
}

pub const DEFAULT_STALL_WINDOW: usize = 100;
pub const DEFAULT_STALL_TOL: f64 = 1e-3;

/// First iteration where the error varied by at most `stall_tol` times
/// its current value over the trailing `window` iterations.
pub fn asymptotic_error(run: &RunRecord, window: usize, stall_tol: f64) -> Result<AsymptoticError> {
    let rel = &run.rel_error;
    if rel.is_empty() {
        return Err(Error::InvalidParameter(
            "run has no reference solution".into(),
        ));
    }
    let scale = run.x_star_norm.filter(|n| *n > 0.0).unwrap_or(1.0);
    let at = stall_point(rel, window, stall_tol);
    let t = at.unwrap_or(rel.len() - 1);
    Ok(AsymptoticError {
        abs: rel[t] * scale,
        rel: rel[t],
        at: t,
        converged: at.is_some(),
    })
}

fn stall_point(trace: &[f64], window: usize, tol: f64) -> Option<usize> {
    (window..trace.len()).find(|&t| {
        let tail = &trace[t - window..=t];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        hi - lo <= tol * trace[t]
    })
}

/// Multiplications per round: `(per agent, at the server)` for the
/// gradient plus `d` residual columns, and `K(t+1) Σg`.
pub fn flop_estimate(n_i: u64, d: u64) -> (u64, u64) {
    (2 * n_i * d + d * (2 * n_i * d), d * d)
}

/// First `t` with relative error at most `eps_tol`.
pub fn iterations_to_tolerance(run: &RunRecord, eps_tol: f64) -> Option<usize> {
    run.rel_error.iter().position(|e| *e <= eps_tol)
}

/// Geometric mean of `‖g(t+1)‖/‖g(t)‖` over the last `window` steps.
pub fn tail_contraction(grad_norm: &[f64], window: usize) -> Option<f64> {
    if window == 0 || grad_norm.len() <= window {
        return None;
    }
    let tail = &grad_norm[grad_norm.len() - window - 1..];
    if tail.iter().any(|g| !(*g > 0.0)) {
        return None;
    }
    Some((tail[window] / tail[0]).powf(1.0 / window as f64))
}
