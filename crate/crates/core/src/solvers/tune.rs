use crate::error::{Error, Result};
use crate::linalg::SpectralSummary;

use super::{IpgParams, LineSearch, SolverKind, SolverParams};

fn need_full_rank(s: &SpectralSummary, what: &str) -> Result<()> {
    if !s.is_full_rank() || s.lambda_d <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{what} tuning needs a full-rank Gram matrix (rank {} of {})",
            s.rank,
            s.dim()
        )));
    }
    Ok(())
}

/// Rate-optimal parameters from the extreme eigenvalues of `AᵀA`.
///
/// APC depends on the local projectors rather than on the spectrum of
/// `AᵀA`; use [`tune_apc`](super::tune_apc) for it.
pub fn tune(kind: SolverKind, s: &SpectralSummary) -> Result<SolverParams> {
    if !(s.lambda1 > 0.0) {
        return Err(Error::InvalidParameter("λ1 must be positive".into()));
    }
    let (l1, lr, ld) = (s.lambda1, s.lambda_r, s.lambda_d);
    Ok(match kind {
        SolverKind::Ipg => {
            need_full_rank(s, "IPG with β = 0")?;
            SolverParams::Ipg(IpgParams {
                alpha: 2.0 / (l1 + ld),
                delta: 1.0,
                beta: 0.0,
            })
        }
        SolverKind::Gd => SolverParams::Gd {
            delta: 2.0 / (l1 + lr),
        },
        SolverKind::Nag => {
            need_full_rank(s, "NAG")?;
            let k3 = (3.0 * l1 / ld + 1.0).sqrt();
            SolverParams::Nag {
                delta: 4.0 / (3.0 * l1 + ld),
                eta: (k3 - 2.0) / (k3 + 2.0),
            }
        }
        SolverKind::Hbm => {
            need_full_rank(s, "HBM")?;
            let rk = (l1 / ld).sqrt();
            SolverParams::Hbm {
                delta: 4.0 / (l1.sqrt() + ld.sqrt()).powi(2),
                eta: ((rk - 1.0) / (rk + 1.0)).powi(2),
            }
        }
        SolverKind::Apc => {
            return Err(Error::InvalidParameter(
                "APC parameters come from the local projectors".into(),
            ))
        }
        SolverKind::Bfgs => SolverParams::Bfgs(LineSearch::default()),
    })
}

/// IPG parameters for `β ≥ 0`: `α = 2/(λ1+λd+2β)` minimizes `ρ(α)` and
/// `δ = 2/(λ1/(λ1+β) + λr/(λr+β))` minimizes `μ(δ)`.
pub fn tune_ipg(s: &SpectralSummary, beta: f64) -> Result<IpgParams> {
    if beta == 0.0 {
        need_full_rank(s, "IPG with β = 0")?;
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("β = {beta} < 0")));
    }
    let (l1, lr, ld) = (s.lambda1, s.lambda_r, s.lambda_d);
    let alpha = 2.0 / (l1 + ld + 2.0 * beta);
    let delta = 2.0 / (l1 / (l1 + beta) + lr / (lr + beta));
    IpgParams::new(alpha, delta, beta)
}

/// The spec-sheet NAG choice `δ = 1/λ1`, `η = (√κ−1)/(√κ+1)`.
pub fn nag_textbook(s: &SpectralSummary) -> Result<SolverParams> {
    need_full_rank(s, "NAG")?;
    let rk = s.kappa.sqrt();
    Ok(SolverParams::Nag {
        delta: 1.0 / s.lambda1,
        eta: (rk - 1.0) / (rk + 1.0),
    })
}
