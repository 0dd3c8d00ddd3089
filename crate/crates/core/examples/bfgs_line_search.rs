//! BFGS with Armijo backtracking versus an exact step length on the same
//! quadratic cost.
//!
//!     cargo run --release --example bfgs_line_search

use ipgd::problem::{synthetic_problem, SyntheticSpec};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::{run_until, LineSearch, Reference, SolverParams, SolverState, StopCriteria};

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("400,60,1e4,60,5")?)?;
    let stop = StopCriteria::default().rel_err_eps(1e-8).max_iters(2_000);
    for (label, ls) in [
        ("backtracking", LineSearch::default()),
        ("exact", LineSearch::Exact),
    ] {
        let mut engine = RoundEngine::from_problem(&problem, 8, Noise::none())?;
        let mut state = SolverState::init(&SolverParams::Bfgs(ls), &engine)?;
        let rec = run_until(
            &mut state,
            &mut engine,
            &stop,
            Reference {
                x_star: problem.x_star.as_ref(),
                k_beta: None,
            },
        )?;
        println!(
            "{label:<13} {:>4} iterations, {:>5} broadcasts",
            rec.iterations,
            engine.broadcasts()
        );
    }
    Ok(())
}
