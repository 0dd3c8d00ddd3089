//! Solve a small synthetic least-squares problem with IPG over 5 agents.
//!
//!     cargo run --example quickstart

use ipgd::linalg::{gram, spectral_summary};
use ipgd::problem::{synthetic_problem, SyntheticSpec};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::{run_until, tune_ipg, Reference, SolverParams, SolverState, StopCriteria};

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("200,20,1e3,20,7")?)?;
    let summary = spectral_summary(&gram(&problem.a)?, 1e-12)?;
    println!("kappa = {:.3e}", summary.kappa);

    let params = tune_ipg(&summary, 0.0)?;
    let mut engine = RoundEngine::from_problem(&problem, 5, Noise::none())?;
    let mut state = SolverState::init(&SolverParams::Ipg(params), &engine)?;
    let stop = StopCriteria::default().rel_err_eps(1e-8).max_iters(10_000);
    let rec = run_until(
        &mut state,
        &mut engine,
        &stop,
        Reference {
            x_star: problem.x_star.as_ref(),
            k_beta: None,
        },
    )?;

    println!("{params:?}");
    println!("{} iterations, stop: {}", rec.iterations, rec.stop_reason);
    println!("final relative error {:.3e}", rec.rel_error.last().unwrap());
    Ok(())
}
