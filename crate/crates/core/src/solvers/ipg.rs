use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SpectralSummary, Vector};
use crate::protocol::{Noise, RoundEngine};

/// Step sizes and regularizer of the pre-conditioned iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpgParams {
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
}

impl IpgParams {
    pub fn new(alpha: f64, delta: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(delta >= 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "IPG needs α > 0, δ ≥ 0, β ≥ 0 (got α={alpha}, δ={delta}, β={beta})"
            )));
        }
        Ok(IpgParams { alpha, delta, beta })
    }

    /// Checks `0 < α < 2/(λ1+β)` and `0 < δ < 2(λ1+β)/λ1`.
    pub fn validate(&self, s: &SpectralSummary) -> Result<()> {
        let l1 = s.lambda1;
        let alpha_max = 2.0 / (l1 + self.beta);
        let delta_max = 2.0 * (l1 + self.beta) / l1;
        if !(self.alpha > 0.0 && self.alpha < alpha_max) {
            return Err(Error::InvalidParameter(format!(
                "α = {} outside (0, {alpha_max})",
                self.alpha
            )));
        }
        if !(self.delta > 0.0 && self.delta < delta_max) {
            return Err(Error::InvalidParameter(format!(
                "δ = {} outside (0, {delta_max})",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Server-side iterate of the pre-conditioned method.
#[derive(Clone, Debug)]
pub struct IpgState {
    pub x: Vector,
    pub k: DenseMatrix,
    pub params: IpgParams,
    sum_r: DenseMatrix,
}

impl IpgState {
    /// `x(0) = 0`, `K(0) = 0`.
    pub fn new(d: usize, params: IpgParams) -> Self {
        IpgState {
            x: Vector::zeros(d),
            k: DenseMatrix::zeros(d, d),
            params,
            sum_r: DenseMatrix::zeros(0, 0),
        }
    }

    pub fn with_start(x: Vector, k: DenseMatrix, params: IpgParams) -> Result<Self> {
        if k.shape() != (x.len(), x.len()) {
            return Err(Error::Dimension(format!(
                "K is {:?} for d = {}",
                k.shape(),
                x.len()
            )));
        }
        Ok(IpgState {
            x,
            k,
            params,
            sum_r: DenseMatrix::zeros(0, 0),
        })
    }

    /// One round. `g` is `Σ gⁱ(x(t))` when the caller already holds it;
    /// otherwise agents return it bundled with their `Rⁱ`.
    pub fn step(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<()> {
        let IpgParams { alpha, delta, beta } = self.params;
        let sum_g = match g {
            Some(g) => {
                engine.precond_exchange_into(&self.k, beta, &mut self.sum_r)?;
                g.clone()
            }
            None => engine.ipg_exchange_into(&self.x, &self.k, beta, &mut self.sum_r)?,
        };
        ipg_server_update_noisy(
            &mut self.x,
            &mut self.k,
            &sum_g,
            &self.sum_r,
            alpha,
            delta,
            engine.noise_mut(),
        )?;
        engine.complete_round();
        Ok(())
    }
}

/// `kⱼ ← kⱼ − α Σ Rⱼ`, then `x ← x − δ K(t+1) Σ g`.
pub fn ipg_server_update(
    x: &Vector,
    k: &DenseMatrix,
    sum_g: &[f64],
    sum_r: &DenseMatrix,
    alpha: f64,
    delta: f64,
) -> Result<(Vector, DenseMatrix)> {
    let mut x = x.clone();
    let mut k = k.clone();
    ipg_server_update_noisy(
        &mut x,
        &mut k,
        sum_g,
        sum_r,
        alpha,
        delta,
        &mut Noise::none(),
    )?;
    Ok((x, k))
}

/// As [`ipg_server_update`], perturbing `K(t+1)` before it is used and
/// `x(t+1)` afterwards.
pub fn ipg_server_update_noisy(
    x: &mut Vector,
    k: &mut DenseMatrix,
    sum_g: &[f64],
    sum_r: &DenseMatrix,
    alpha: f64,
    delta: f64,
    noise: &mut Noise,
) -> Result<()> {
    let d = x.len();
    if k.shape() != (d, d) || sum_r.shape() != (d, d) || sum_g.len() != d {
        return Err(Error::Dimension(format!(
            "server update: x {d}, K {:?}, ΣR {:?}, Σg {}",
            k.shape(),
            sum_r.shape(),
            sum_g.len()
        )));
    }
    k.axpy(-alpha, sum_r);
    noise.apply_columns(k);
    if delta != 0.0 {
        let step = k.mul_vec(sum_g);
        x.axpy(-delta, &step);
    }
    noise.apply(x);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, k_beta, spectral_summary};
    use crate::problem::LeastSquaresProblem;

    #[test]
    fn first_step_from_zero() {
        let x = Vector::zeros(2);
        let k = DenseMatrix::zeros(2, 2);
        let sum_r = DenseMatrix::identity(2).scaled(-1.0);
        let (x1, k1) = ipg_server_update(&x, &k, &[-4.0, -1.0], &sum_r, 0.1, 1.0).unwrap();
        assert_eq!(k1, DenseMatrix::identity(2).scaled(0.1));
        // x uses K(1), not K(0).
        assert!((x1[0] - 0.4).abs() < 1e-15 && (x1[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn newton_step_at_fixed_point() {
        let p = LeastSquaresProblem::with_ones_solution(
            "d",
            DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 1.0], [1.0, 3.0]]),
        );
        let kb = k_beta(&gram(&p.a).unwrap(), 0.0).unwrap();
        let x = Vector::from_slice(&[0.3, -0.7]);
        let g = p.gradient(&x);
        let (x1, k1) = ipg_server_update(&x, &kb, &g, &DenseMatrix::zeros(2, 2), 0.2, 1.0).unwrap();
        assert_eq!(k1, kb);
        assert!(x1.distance(p.x_star.as_ref().unwrap()) < 1e-14);
    }

    #[test]
    fn zero_delta_keeps_x() {
        let x = Vector::from_slice(&[1.0, 2.0]);
        let (x1, _) = ipg_server_update(
            &x,
            &DenseMatrix::identity(2),
            &[5.0, 5.0],
            &DenseMatrix::zeros(2, 2),
            0.1,
            0.0,
        )
        .unwrap();
        assert_eq!(x1, x);
        assert!(ipg_server_update(
            &x,
            &DenseMatrix::identity(3),
            &[5.0, 5.0],
            &DenseMatrix::zeros(2, 2),
            0.1,
            0.0
        )
        .is_err());
    }

    #[test]
    fn parameter_validation() {
        let s = spectral_summary(&DenseMatrix::from_diag(&[4.0, 1.0]), 1e-12).unwrap();
        assert!(IpgParams::new(0.4, 1.0, 0.0).unwrap().validate(&s).is_ok());
        assert!(IpgParams::new(0.5, 1.0, 0.0).unwrap().validate(&s).is_err());
        assert!(IpgParams::new(0.4, 2.0, 0.0).unwrap().validate(&s).is_err());
        assert!(IpgParams::new(0.0, 1.0, 0.0).is_err());
    }
}
