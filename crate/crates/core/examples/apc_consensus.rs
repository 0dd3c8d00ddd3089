//! Projection-based consensus on a consistent square system, with the
//! parameters tuned from the local projectors.
//!
//!     cargo run --example apc_consensus

use ipgd::problem::{synthetic_problem, SyntheticSpec};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::{
    apc_init, run_until, tune_apc, ApcParams, Reference, SolverState, StopCriteria,
};

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("40,40,100,40,9")?)?;
    let mut engine = RoundEngine::from_problem(&problem, 4, Noise::none())?;
    let mut apc = apc_init(engine.shards(), ApcParams::new(1.0, 1.0)?)?;
    let tuned = tune_apc(&apc.projections)?;
    println!("tuned gamma {:.4}, eta {:.4}", tuned.gamma, tuned.eta);
    apc.gamma = tuned.gamma;
    apc.eta_apc = tuned.eta;

    let mut state = SolverState::Apc(apc);
    let stop = StopCriteria::default().rel_err_eps(1e-8).max_iters(20_000);
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
        "{} iterations to relative error {:.2e}",
        rec.iterations,
        rec.rel_error.last().unwrap()
    );

    // Rows split over more agents than the local blocks can stay full row rank for.
    let wide = synthetic_problem(&SyntheticSpec::parse("40,10,100,10,9")?)?;
    let e = RoundEngine::from_problem(&wide, 2, Noise::none())?;
    match apc_init(e.shards(), ApcParams::new(1.0, 1.0)?) {
        Ok(_) => println!("overdetermined blocks accepted"),
        Err(err) => println!("overdetermined blocks: {err}"),
    }
    Ok(())
}
