//! Driving the round engine by hand: one IPG exchange, the server update,
//! and the pre-conditioner approaching `(AᵀA)⁻¹`.
//!
//!     cargo run --example manual_rounds

use ipgd::linalg::{frobenius_distance, gram, k_beta, spectral_summary, DenseMatrix, Vector};
use ipgd::problem::{synthetic_problem, SyntheticSpec};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::ipg_server_update;

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("30,5,20,5,1")?)?;
    let g = gram(&problem.a)?;
    let s = spectral_summary(&g, 1e-12)?;
    let kb = k_beta(&g, 0.0)?;
    let alpha = 2.0 / (s.lambda1 + s.lambda_d);

    let mut engine = RoundEngine::from_problem(&problem, 3, Noise::none())?;
    let mut x = Vector::zeros(5);
    let mut k = DenseMatrix::zeros(5, 5);
    for t in 0..=60 {
        if t % 10 == 0 {
            let err = x.distance(problem.x_star.as_ref().unwrap());
            println!(
                "t={t:>2}  |K - K_b|_F = {:.3e}  |x - x*| = {err:.3e}",
                frobenius_distance(&k, &kb)?
            );
        }
        let (sum_g, sum_r) = engine.ipg_exchange(&x, &k, 0.0)?;
        (x, k) = ipg_server_update(&x, &k, &sum_g, &sum_r, alpha, 1.0)?;
        engine.complete_round();
    }
    println!(
        "{} rounds, {} broadcasts",
        engine.round(),
        engine.broadcasts()
    );
    Ok(())
}
