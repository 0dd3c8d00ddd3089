//! Load a Matrix Market file, split it across agents, and compare the
//! distributed gradient with the centralized one.
//!
//!     cargo run --example matrix_market -- tests/fixtures/small_general.mtx 3

use ipgd::problem::{load_matrix_market, partition, LeastSquaresProblem};
use ipgd::protocol::{Noise, RoundEngine};

fn main() -> ipgd::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/fixtures/small_general.mtx"
        )
        .into()
    });
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let a = load_matrix_market(&path)?;
    println!("{path}: {} x {}, {} nonzeros", a.rows(), a.cols(), a.nnz());
    let problem = LeastSquaresProblem::with_ones_solution("file", a);
    for shard in partition(&problem, m)? {
        println!("agent {}: {} rows", shard.agent_id, shard.rows());
    }

    let x = vec![0.5; problem.dim()];
    let mut engine = RoundEngine::from_problem(&problem, m, Noise::none())?;
    let distributed = engine.gradient(&x)?;
    let central = problem.gradient(&x);
    println!("sum of local gradients {:?}", &distributed[..]);
    println!(
        "gap to centralized     {:.3e}",
        distributed.distance(&central)
    );
    Ok(())
}
