use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu, Vector};
use crate::protocol::RoundEngine;

use super::momentum::obtain_gradient;

/// Largest tolerated pivot ratio of `M` before it counts as singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Step-length rule for the quasi-Newton direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineSearch {
    /// Armijo backtracking on the aggregate cost; each probe costs one
    /// broadcast of the trial point.
    Backtracking {
        armijo_c: f64,
        shrink: f64,
        initial_step: f64,
        max_reductions: usize,
    },
    /// Exact minimizer along the direction for quadratic costs, using one
    /// extra gradient exchange to obtain the curvature.
    Exact,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::Backtracking {
            armijo_c: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            max_reductions: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsState {
    pub x: Vector,
    /// Hessian approximation.
    pub m: DenseMatrix,
    pub line_search: LineSearch,
    /// Step length chosen in the latest round.
    pub last_step: f64,
    /// Rounds in which the curvature guard skipped the update of `M`.
    pub skipped_updates: usize,
}

impl BfgsState {
    /// `x(0) = 0`, `M(0) = I`.
    pub fn new(d: usize, line_search: LineSearch) -> Self {
        BfgsState {
            x: Vector::zeros(d),
            m: DenseMatrix::identity(d),
            line_search,
            last_step: 0.0,
            skipped_updates: 0,
        }
    }

    /// One outer iteration. Returns `Σ gⁱ(x(t+1))`, which the server
    /// already gathered for the secant pair.
    pub fn step(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<Vector> {
        let g = obtain_gradient(engine, &self.x, g)?;
        let lu = Lu::new(&self.m)?;
        let cond = lu.pivot_ratio();
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Singular(format!(
                "approximate Hessian has pivot ratio {cond:e}"
            )));
        }
        let s = lu.solve(&g.scaled(-1.0));
        if !s.is_finite() {
            return Err(Error::Singular(
                "approximate Hessian solve produced non-finite values".into(),
            ));
        }

        let eta = match self.line_search {
            LineSearch::Backtracking {
                armijo_c,
                shrink,
                initial_step,
                max_reductions,
            } => {
                let f0 = engine.cost(&self.x)?;
                let slope = g.dot(&s);
                let mut eta = initial_step;
                let mut accepted = None;
                for _ in 0..=max_reductions {
                    let mut trial = self.x.clone();
                    trial.axpy(eta, &s);
                    let f = engine.cost(&trial)?;
                    if f <= f0 + armijo_c * eta * slope {
                        accepted = Some(eta);
                        break;
                    }
                    eta *= shrink;
                }
                accepted.ok_or(Error::LineSearch(max_reductions))?
            }
            LineSearch::Exact => {
                let mut probe = self.x.clone();
                probe.axpy(1.0, &s);
                let hs = engine.gradient(&probe)?.sub(&g);
                let curvature = s.dot(&hs);
                if !(curvature > 0.0) {
                    return Err(Error::LineSearch(0));
                }
                -g.dot(&s) / curvature
            }
        };
        self.last_step = eta;

        self.x.axpy(eta, &s);
        engine.noise_mut().apply(&mut self.x);
        let g_next = engine.gradient(&self.x)?;
        let y = g_next.sub(&g);
        if !bfgs_update(&mut self.m, &s, &y, eta) {
            self.skipped_updates += 1;
        }
        engine.noise_mut().apply_columns(&mut self.m);
        engine.complete_round();
        Ok(g_next)
    }
}

/// `M ← M + yyᵀ/(η yᵀs) − M s sᵀ Mᵀ/(sᵀ M s)`, with `s` the search
/// direction and `η s` the step taken. Returns `false` when the curvature
/// guard skips the update.
pub fn bfgs_update(m: &mut DenseMatrix, s: &[f64], y: &[f64], eta: f64) -> bool {
    let ys: f64 = y.iter().zip(s).map(|(a, b)| a * b).sum();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ns = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let denom1 = eta * ys;
    if denom1.abs() <= 1e-14 * ny * ns || denom1 == 0.0 {
        return false;
    }
    let ms = m.mul_vec(s);
    let denom2: f64 = s.iter().zip(ms.iter()).map(|(a, b)| a * b).sum();
    if denom2 == 0.0 || !denom2.is_finite() {
        return false;
    }
    let d = s.len();
    for i in 0..d {
        let row = m.row_mut(i);
        let a = y[i] / denom1;
        let b = ms[i] / denom2;
        for j in 0..d {
            row[j] += a * y[j] - b * ms[j];
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LeastSquaresProblem;
    use crate::protocol::Noise;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve_direction() {
        let lu = Lu::new(&DenseMatrix::identity(2)).unwrap();
        let s = lu.solve(&[4.0, 1.0]);
        assert_eq!(&*s, &[4.0, 1.0]);
    }

    #[test]
    fn guard_skips_zero_curvature() {
        let mut m = DenseMatrix::identity(3);
        assert!(!bfgs_update(
            &mut m,
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
            1.0
        ));
        assert_eq!(m, DenseMatrix::identity(3));
    }

    #[test]
    fn secant_condition_holds_after_update() {
        let mut m = DenseMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]);
        let s = [0.3, -0.2];
        let y = [1.0, 0.4];
        let eta = 0.5;
        assert!(bfgs_update(&mut m, &s, &y, eta));
        // M(t+1)·(η s) = y
        let step: Vec<f64> = s.iter().map(|v| v * eta).collect();
        assert!(m.mul_vec(&step).distance(&y) < 1e-14);
    }

    #[test]
    fn exact_line_search_terminates_quickly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = DenseMatrix::from_vec(
            10,
            5,
            (0..50).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let p = LeastSquaresProblem::with_ones_solution("q", a);
        let mut e = RoundEngine::from_problem(&p, 2, Noise::none()).unwrap();
        let mut st = BfgsState::new(5, LineSearch::Exact);
        let mut iters = 0;
        while st.x.distance(&[1.0; 5]) / 5f64.sqrt() > 1e-8 {
            st.step(&mut e, None).unwrap();
            iters += 1;
            assert!(iters <= 5 + 5, "no convergence after {iters} iterations");
        }
    }

    #[test]
    fn backtracking_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = DenseMatrix::from_vec(
            12,
            4,
            (0..48).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let p = LeastSquaresProblem::with_ones_solution("q", a);
        let mut e = RoundEngine::from_problem(&p, 3, Noise::none()).unwrap();
        let mut st = BfgsState::new(4, LineSearch::default());
        let mut g = None;
        for _ in 0..100 {
            g = Some(st.step(&mut e, g.as_ref()).unwrap());
            if st.x.distance(&[1.0; 4]) < 1e-10 {
                break;
            }
        }
        assert!(st.x.distance(&[1.0; 4]) < 1e-10);
    }
}
