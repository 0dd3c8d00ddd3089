use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SpectralSummary};

use super::rho_of_alpha;

/// Asymptotic-error diagnostics for the pre-conditioned method under
/// bounded system noise, with `β = 0` and `δ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseReport {
    /// `ρ(α)`
    pub rho: f64,
    /// `‖k̃ⱼ(0)‖ / (‖k̃ⱼ(0)‖ + w)` per column.
    pub rho_j: Vec<f64>,
    /// Largest noise level for which a bound is claimed.
    pub w_bd: f64,
    /// `S(t)` for `t = 0..=horizon`.
    pub s_t: Vec<f64>,
    /// `R(t) = λ1 S(t)`.
    pub r_t: Vec<f64>,
    /// First `t` with `R(t+1) < 1` within the horizon.
    pub t_prime: Option<usize>,
    /// `w / (1 − R(T′+1))`, only when the conditions hold.
    pub asymptotic_bound: Option<f64>,
    pub conditions_hold: bool,
}

/// Column norms `‖kⱼ(0) − kⱼβ‖`.
pub fn column_distances(k0: &DenseMatrix, k_beta: &DenseMatrix) -> Result<Vec<f64>> {
    if k0.shape() != k_beta.shape() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            k0.shape(),
            k_beta.shape()
        )));
    }
    Ok((0..k0.cols())
        .map(|j| k0.col(j).distance(&k_beta.col(j)))
        .collect())
}

/// `w` bounds the norm of every noise vector added to a column of `K` or
/// to `x`.
pub fn noise_diagnostics(
    k0_cols_dist: &[f64],
    s: &SpectralSummary,
    alpha: f64,
    w: f64,
    horizon: usize,
) -> Result<NoiseReport> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let d = s.dim();
    if k0_cols_dist.len() != d {
        return Err(Error::Dimension(format!(
            "{} column distances for dimension {d}",
            k0_cols_dist.len()
        )));
    }
    if !(w >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise level {w} < 0")));
    }
    let l1 = s.lambda1;
    let rho = rho_of_alpha(l1, s.lambda_d, 0.0, alpha);
    let rho_j: Vec<f64> = k0_cols_dist
        .iter()
        .map(|&c| if c + w > 0.0 { c / (c + w) } else { 1.0 })
        .collect();
    let w_bd = (1.0 - rho) / (l1 * (d as f64).sqrt());

    let mut s_t = Vec::with_capacity(horizon + 1);
    let mut rho_pow = 1.0;
    let mut geom = 1.0;
    for _ in 0..=horizon {
        let sq: f64 = k0_cols_dist
            .iter()
            .map(|c| (rho_pow * c + geom * w).powi(2))
            .sum();
        s_t.push(sq.sqrt());
        rho_pow *= rho;
        geom += rho_pow;
    }
    let r_t: Vec<f64> = s_t.iter().map(|v| l1 * v).collect();

    let conditions_hold = rho < 1.0 && rho_j.iter().all(|&rj| rho < rj) && w < w_bd;
    let t_prime = (0..horizon).find(|&t| r_t[t + 1] < 1.0);
    let asymptotic_bound = match (conditions_hold, t_prime) {
        (true, Some(t)) => Some(w / (1.0 - r_t[t + 1])),
        _ => None,
    };
    Ok(NoiseReport {
        rho,
        rho_j,
        w_bd,
        s_t,
        r_t,
        t_prime,
        asymptotic_bound,
        conditions_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(eigs: &[f64]) -> SpectralSummary {
        SpectralSummary::from_eigenvalues(eigs.to_vec(), 1e-12).unwrap()
    }

    #[test]
    fn hand_values() {
        let r = noise_diagnostics(&[0.2, 0.8], &summary(&[4.0, 1.0]), 0.4, 0.01, 50).unwrap();
        assert!((r.rho - 0.6).abs() < 1e-15);
        assert!((r.w_bd - 0.4 / (4.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((r.w_bd - 0.070711).abs() < 1e-6);
        assert!((r.rho_j[0] - 0.2 / 0.21).abs() < 1e-15);
        assert!(r.conditions_hold);
        assert!(r.r_t.windows(2).all(|p| p[1] < p[0]));
        let tp = r.t_prime.unwrap();
        assert!(r.r_t[tp + 1] < 1.0 && (tp == 0 || r.r_t[tp] >= 1.0));
        assert!((r.asymptotic_bound.unwrap() - 0.01 / (1.0 - r.r_t[tp + 1])).abs() < 1e-15);
        // The tail of R(t) approaches w / w_bd.
        assert!((r.r_t[50] - 0.01 / r.w_bd).abs() < 1e-9);
    }

    #[test]
    fn noiseless_degenerate() {
        let c = [0.3, 0.4];
        let r = noise_diagnostics(&c, &summary(&[4.0, 1.0]), 0.4, 0.0, 40).unwrap();
        assert!(r.conditions_hold);
        for (t, s) in r.s_t.iter().enumerate() {
            assert!((s - 0.6f64.powi(t as i32) * 0.5).abs() < 1e-15);
        }
        assert_eq!(r.asymptotic_bound, Some(0.0));
    }

    #[test]
    fn condition_violation_and_errors() {
        let s = summary(&[4.0, 1.0]);
        let r = noise_diagnostics(&[0.3, 0.4], &s, 0.4, 0.08, 10).unwrap();
        assert!(!r.conditions_hold);
        assert_eq!(r.asymptotic_bound, None);
        assert!(noise_diagnostics(&[0.3, 0.4], &s, 0.4, 0.01, 0).is_err());
        assert!(noise_diagnostics(&[0.3], &s, 0.4, 0.01, 5).is_err());
    }
}
