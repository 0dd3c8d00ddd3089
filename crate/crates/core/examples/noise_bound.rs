//! Predicted asymptotic error of IPG under bounded noise, compared with a
//! noisy run on the same instance.
//!
//!     cargo run --example noise_bound

use ipgd::analysis::{column_distances, noise_diagnostics};
use ipgd::linalg::{gram, k_beta, spectral_summary, DenseMatrix};
use ipgd::problem::LeastSquaresProblem;
use ipgd::protocol::{Noise, NoiseChannel, RoundEngine};
use ipgd::solvers::{run_traced, IpgParams, Reference, SolverParams, SolverState, StopCriteria};

fn main() -> ipgd::error::Result<()> {
    // Well-conditioned 3-dimensional instance.
    let a = DenseMatrix::from_rows(&[
        [1.2, 0.1, 0.0],
        [0.0, 1.0, 0.2],
        [0.1, 0.0, 0.9],
        [0.3, 0.2, 0.1],
    ]);
    let problem = LeastSquaresProblem::with_ones_solution("small", a);
    let g = gram(&problem.a)?;
    let s = spectral_summary(&g, 1e-12)?;
    let alpha = 1.0 / s.lambda1;
    let kb = k_beta(&g, 0.0)?;
    let dists = column_distances(&DenseMatrix::zeros(3, 3), &kb)?;

    let w_entry = 1e-5;
    let channel = NoiseChannel::AdditiveUniform {
        lo: -w_entry,
        hi: w_entry,
        seed: 3,
    };
    let w = channel.norm_bound(3);
    let report = noise_diagnostics(&dists, &s, alpha, w, 400)?;
    println!(
        "rho {:.4}  w {:.3e}  w_bd {:.3e}",
        report.rho, w, report.w_bd
    );
    println!(
        "T' = {:?}, conditions hold: {}",
        report.t_prime, report.conditions_hold
    );

    let mut engine = RoundEngine::from_problem(&problem, 2, Noise::new(channel)?)?;
    let mut state = SolverState::init(
        &SolverParams::Ipg(IpgParams::new(alpha, 1.0, 0.0)?),
        &engine,
    )?;
    let rec = run_traced(
        &mut state,
        &mut engine,
        &StopCriteria::default().max_iters(600),
        Reference {
            x_star: problem.x_star.as_ref(),
            k_beta: None,
        },
    )?;
    let scale = problem.x_star.as_ref().unwrap().norm();
    let tail = rec.rel_error[500..]
        .iter()
        .fold(0.0f64, |m, e| m.max(e * scale));
    match report.asymptotic_bound {
        Some(b) => println!(
            "largest error over the last 100 rounds {tail:.3e} <= bound {b:.3e}: {}",
            tail <= b
        ),
        None => println!("largest error over the last 100 rounds {tail:.3e}; no bound claimed"),
    }
    Ok(())
}
