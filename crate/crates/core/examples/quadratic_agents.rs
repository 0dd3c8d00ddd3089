//! Agents that hold a quadratic cost `½xᵀPx − qᵀx + r` instead of raw rows.
//! IPG reaches the same minimizer as with the least-squares shards.
//!
//!     cargo run --example quadratic_agents

use ipgd::linalg::{gram, spectral_summary};
use ipgd::problem::{
    check_quadratic_convexity, lsq_to_quadratic, partition, synthetic_problem, SyntheticSpec,
};
use ipgd::protocol::{Noise, RoundEngine};
use ipgd::solvers::{run_until, tune_ipg, Reference, SolverParams, SolverState, StopCriteria};

fn main() -> ipgd::error::Result<()> {
    let problem = synthetic_problem(&SyntheticSpec::parse("60,8,50,8,2")?)?;
    let s = spectral_summary(&gram(&problem.a)?, 1e-12)?;
    let params = SolverParams::Ipg(tune_ipg(&s, 0.0)?);
    let stop = StopCriteria::default().rel_err_eps(1e-10).max_iters(5_000);
    let reference = Reference {
        x_star: problem.x_star.as_ref(),
        k_beta: None,
    };

    let quads: Vec<_> = partition(&problem, 4)?
        .iter()
        .map(lsq_to_quadratic)
        .collect();
    check_quadratic_convexity(&quads)?;
    let mut q_engine = RoundEngine::from_quadratic(quads, Noise::none())?;
    let mut q_state = SolverState::init(&params, &q_engine)?;
    let q = run_until(&mut q_state, &mut q_engine, &stop, reference)?;

    let mut engine = RoundEngine::from_problem(&problem, 4, Noise::none())?;
    let mut state = SolverState::init(&params, &engine)?;
    let l = run_until(&mut state, &mut engine, &stop, reference)?;

    println!("quadratic agents:     {} iterations", q.iterations);
    println!("least-squares agents: {} iterations", l.iterations);
    println!("estimate gap {:.3e}", q.final_x.distance(&l.final_x));
    Ok(())
}
