//! Closed-form rates for IPG and GD, then the per-iteration gradient bound
//! checked on an actual run.
//!
//!     cargo run --example rate_report

use ipgd::analysis::{gradient_bound_check, theoretical_rates};
use ipgd::linalg::{frobenius_distance, gram, k_beta, spectral_summary, DenseMatrix};
use ipgd::problem::{synthetic_problem, SyntheticSpec};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::{run_until, IpgParams, Reference, SolverParams, SolverState, StopCriteria};

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("120,12,200,12,3")?)?;
    let g = gram(&problem.a)?;
    let s = spectral_summary(&g, 1e-12)?;
    let beta = 0.5;
    let alpha = 1.0 / (s.lambda1 + beta);
    let report = theoretical_rates(&s, beta, alpha, 1.0)?;
    println!(
        "lambda1 {:.4e}  lambda_r {:.4e}  kappa {:.3e}",
        s.lambda1, s.lambda_r, s.kappa
    );
    println!("mu*      {:.6}", report.mu_star);
    println!("mu(1)    {:.6}", report.mu_of_delta);
    println!(
        "rho(a)   {:.6}  (best {:.6})",
        report.rho_of_alpha, report.varrho
    );
    println!("mu_GD    {:.6}", report.mu_gd);
    println!("delta*   {:.6}", report.delta_crit);

    let kb = k_beta(&g, beta)?;
    let mut engine = RoundEngine::from_problem(&problem, 4, Noise::none())?;
    let mut state = SolverState::init(
        &SolverParams::Ipg(IpgParams::new(alpha, 1.0, beta)?),
        &engine,
    )?;
    let stop = StopCriteria::default().grad_eps(1e-10).max_iters(2_000);
    let rec = run_until(
        &mut state,
        &mut engine,
        &stop,
        Reference {
            x_star: problem.x_star.as_ref(),
            k_beta: Some(&kb),
        },
    )?;
    let check = gradient_bound_check(
        &rec,
        &report,
        frobenius_distance(&DenseMatrix::zeros(s.dim(), s.dim()), &kb)?,
    )?;
    println!(
        "{} iterations; bound held: {} (first violation {:?})",
        rec.iterations, check.pass, check.first_violation
    );
    Ok(())
}
