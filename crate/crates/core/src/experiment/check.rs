//! Randomized property suites behind `ipgd check`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    column_distances, gradient_bound_check, mu_of_delta, noise_diagnostics, rho_of_alpha,
    tail_contraction, theoretical_rates,
};
use crate::error::Result;
use crate::linalg::{
    frobenius_distance, gram, k_beta, spectral_summary, DenseMatrix, SpectralSummary,
    DEFAULT_RANK_TOL,
};
use crate::problem::{
    lsq_to_quadratic, partition, synthetic_problem, LeastSquaresProblem, SyntheticSpec,
};
use crate::protocol::{Noise, NoiseChannel, RoundEngine};
use crate::solvers::{
    run_traced, IpgParams, IpgState, Reference, SolverParams, SolverState, StopCriteria,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    pub seed: u64,
    /// Negative-control hook: when set, IPG runs use `α = f·2/(λ1+β)`
    /// while the checks keep the nominal admissible `α`.
    pub alpha_inflation: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 1,
            alpha_inflation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub id: char,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{verdict}] ({}) {}: {}",
            self.id, self.name, self.detail
        )
    }
}

pub const SUITES: [(char, &str); 10] = [
    ('a', "column contraction of the pre-conditioner"),
    ('b', "per-iteration gradient bound"),
    ('c', "superlinear ratio bound, full rank"),
    ('d', "distributed vs centralized gradient"),
    ('e', "quadratic-form agents"),
    ('f', "isotropic one-step convergence"),
    ('g', "rank-deficient convergence with beta > 0"),
    ('h', "gradient-descent tail contraction"),
    ('i', "optimal delta attains the best rate"),
    ('j', "asymptotic error under bounded noise"),
];

pub fn run_checks(opts: &CheckOptions) -> Vec<SuiteResult> {
    SUITES.iter().map(|(id, _)| run_suite(*id, opts)).collect()
}

pub fn run_suite(id: char, opts: &CheckOptions) -> SuiteResult {
    let name = SUITES
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown");
    // Each suite gets its own stream so that suites can run alone.
    let mut rng =
        ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9).wrapping_add(id as u64));
    let outcome = match id {
        'a' => column_contraction(&mut rng, opts),
        'b' => gradient_bound(&mut rng, opts),
        'c' => superlinear_bound(&mut rng, opts),
        'd' => distributed_gradient(&mut rng, opts),
        'e' => quadratic_agents(&mut rng, opts),
        'f' => isotropic(&mut rng, opts),
        'g' => rank_deficient(&mut rng, opts),
        'h' => gd_tail(&mut rng),
        'i' => optimal_delta(&mut rng),
        'j' => noise_bound(&mut rng, opts),
        _ => Ok(Err(format!("no suite `{id}`"))),
    };
    let (pass, detail) = match outcome {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(e) => (false, format!("error: {e}")),
    };
    SuiteResult {
        id,
        name,
        pass,
        detail,
    }
}

/// `Ok(Ok(detail))` passes, `Ok(Err(detail))` fails.
type Outcome = Result<std::result::Result<String, String>>;

struct Instance {
    problem: LeastSquaresProblem,
    gram: DenseMatrix,
    summary: SpectralSummary,
    agents: usize,
}

fn instance(rng: &mut ChaCha8Rng, full_rank: bool, kappa: (f64, f64)) -> Result<Instance> {
    let d = rng.random_range(2..=8);
    let n = rng.random_range(d..=3 * d);
    let rank = if full_rank { d } else { rng.random_range(1..d) };
    let spec = SyntheticSpec {
        n,
        d,
        kappa: rng.random_range(kappa.0..kappa.1),
        rank,
        seed: rng.random(),
    };
    let problem = synthetic_problem(&spec)?;
    let g = gram(&problem.a)?;
    let summary = spectral_summary(&g, DEFAULT_RANK_TOL)?;
    let agents = rng.random_range(1..=n.min(4));
    Ok(Instance {
        problem,
        gram: g,
        summary,
        agents,
    })
}

fn engine(inst: &Instance, noise: NoiseChannel) -> Result<RoundEngine> {
    RoundEngine::from_problem(&inst.problem, inst.agents, Noise::new(noise)?)
}

/// `α` the solver actually runs with.
fn effective_alpha(nominal: f64, s: &SpectralSummary, beta: f64, opts: &CheckOptions) -> f64 {
    match opts.alpha_inflation {
        Some(f) => f * 2.0 / (s.lambda1 + beta),
        None => nominal,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_vec(
        d,
        d,
        (0..d * d)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

fn column_contraction(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    for case in 0..50 {
        let full = case % 2 == 0;
        let inst = instance(rng, full, (1.5, 100.0))?;
        let s = &inst.summary;
        let beta = if full {
            [0.0, 0.1, 1.0][case % 3]
        } else {
            [0.1, 1.0][case % 2]
        };
        let nominal = rng.random_range(0.1..0.95) * 2.0 / (s.lambda1 + beta);
        let rho = rho_of_alpha(s.lambda1, s.lambda_d, beta, nominal);
        let kb = k_beta(&inst.gram, beta)?;
        // Start far from K_β so rounding stays negligible next to the columns.
        let scale = 1e6 * kb.max_abs();
        let d = inst.problem.dim();
        let params = IpgParams::new(effective_alpha(nominal, s, beta, opts), 1.0, beta)?;
        let mut st = IpgState::with_start(
            crate::linalg::Vector::zeros(d),
            random_matrix(rng, d, scale),
            params,
        )?;
        let mut e = engine(&inst, NoiseChannel::None)?;
        let floors: Vec<f64> = (0..d).map(|j| kb.col(j).norm()).collect();
        let mut prev = column_distances(&st.k, &kb)?;
        for t in 0..30 {
            st.step(&mut e, None)?;
            let now = column_distances(&st.k, &kb)?;
            for j in 0..d {
                if prev[j] > floors[j] && prev[j] > 0.0 {
                    let ratio = now[j] / prev[j];
                    worst = worst.max(ratio - rho);
                    if !(ratio <= rho + 1e-12) {
                        return Ok(Err(format!(
                            "instance {case}, t={t}, column {j}: ratio {ratio:.15} > rho {rho:.15}"
                        )));
                    }
                }
            }
            prev = now;
        }
    }
    Ok(Ok(format!("50 instances, max(ratio - rho) = {worst:.3e}")))
}

fn run_ipg(
    inst: &Instance,
    params: IpgParams,
    k0: Option<DenseMatrix>,
    iters: usize,
    noise: NoiseChannel,
) -> Result<crate::solvers::RunRecord> {
    let d = inst.problem.dim();
    let mut ipg = IpgState::new(d, params);
    if let Some(k) = k0 {
        ipg.k = k;
    }
    let mut st = SolverState::Ipg(ipg);
    let mut e = engine(inst, noise)?;
    run_traced(
        &mut st,
        &mut e,
        &StopCriteria::default().max_iters(iters),
        Reference {
            x_star: inst.problem.x_star.as_ref(),
            k_beta: None,
        },
    )
}

fn gradient_bound(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    for case in 0..100 {
        let inst = instance(rng, case % 2 == 0, (1.5, 200.0))?;
        let s = &inst.summary;
        let beta = [0.1, 1.0, 5.0][case % 3];
        let nominal = rng.random_range(0.1..0.95) * 2.0 / (s.lambda1 + beta);
        let delta = rng.random_range(0.1..1.9) * (s.lambda1 + beta) / s.lambda1;
        let kb = k_beta(&inst.gram, beta)?;
        let d = inst.problem.dim();
        let k0 = if case % 4 < 2 {
            DenseMatrix::zeros(d, d)
        } else {
            random_matrix(rng, d, kb.max_abs())
        };
        let k0_dist = frobenius_distance(&k0, &kb)?;
        let params = IpgParams::new(effective_alpha(nominal, s, beta, opts), delta, beta)?;
        let rec = run_ipg(&inst, params, Some(k0), 40, NoiseChannel::None)?;
        let report = theoretical_rates(s, beta, params.alpha, delta)?;
        let report = crate::analysis::RateReport {
            rho_of_alpha: rho_of_alpha(s.lambda1, s.lambda_d, beta, nominal),
            ..report
        };
        let chk = gradient_bound_check(&rec, &report, k0_dist)?;
        if !chk.pass {
            let t = chk.first_violation.unwrap();
            return Ok(Err(format!(
                "run {case} (d={d}, rank {}, beta {beta}): bound broken at t={t}: {:.6e} > {:.6e} * {:.6e}",
                s.rank,
                rec.grad_norm[t + 1],
                chk.bounds[t],
                rec.grad_norm[t]
            )));
        }
    }
    Ok(Ok("100 runs, bound held at every iteration".into()))
}

fn superlinear_bound(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    for case in 0..30 {
        let inst = instance(rng, true, (1.5, 200.0))?;
        let s = &inst.summary;
        let nominal = rng.random_range(0.1..0.95) * 2.0 / s.lambda1;
        let kb = k_beta(&inst.gram, 0.0)?;
        let d = inst.problem.dim();
        let k0 = if case % 2 == 0 {
            DenseMatrix::zeros(d, d)
        } else {
            random_matrix(rng, d, kb.max_abs())
        };
        let k0_dist = frobenius_distance(&k0, &kb)?;
        let params = IpgParams::new(effective_alpha(nominal, s, 0.0, opts), 1.0, 0.0)?;
        let rec = run_ipg(&inst, params, Some(k0), 40, NoiseChannel::None)?;
        let rho = rho_of_alpha(s.lambda1, s.lambda_d, 0.0, nominal);
        let slack = 1e-9 * rec.grad_norm[0];
        let mut rho_pow = rho;
        for t in 0..rec.iterations {
            let bound = s.lambda1 * k0_dist * rho_pow;
            rho_pow *= rho;
            if !(rec.grad_norm[t + 1] <= bound * rec.grad_norm[t] + slack) {
                return Ok(Err(format!(
                    "run {case}: ratio {:.6e} above {bound:.6e} at t={t}",
                    rec.grad_norm[t + 1] / rec.grad_norm[t]
                )));
            }
        }
    }
    Ok(Ok("30 full-rank runs with delta = 1, beta = 0".into()))
}

fn distributed_gradient(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let inst = instance(rng, true, (1.5, 100.0))?;
        let s = &inst.summary;
        let nominal = 2.0 / (s.lambda1 + s.lambda_d);
        let params = IpgParams::new(effective_alpha(nominal, s, 0.0, opts), 1.0, 0.0)?;
        let mut st = IpgState::new(inst.problem.dim(), params);
        let mut e = engine(&inst, NoiseChannel::None)?;
        let g0 = inst.problem.gradient(&st.x).norm();
        for t in 0..25 {
            let central = inst.problem.gradient(&st.x);
            if central.norm() < 1e-5 * g0 {
                break;
            }
            let dist = e.gradient(&st.x)?;
            let rel = dist.distance(&central) / central.norm();
            worst = worst.max(rel);
            if !(rel <= 1e-10) {
                return Ok(Err(format!("case {case}, t={t}: relative gap {rel:.3e}")));
            }
            st.step(&mut e, Some(&dist))?;
        }
    }
    Ok(Ok(format!("20 runs, worst relative gap {worst:.3e}")))
}

fn quadratic_agents(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let inst = instance(rng, case % 2 == 0, (1.5, 100.0))?;
        let s = &inst.summary;
        let beta = if case % 2 == 0 { 0.0 } else { 0.5 };
        let nominal = 2.0 / (s.lambda1 + s.lambda_d + 2.0 * beta);
        let params = IpgParams::new(effective_alpha(nominal, s, beta, opts), 1.0, beta)?;
        let shards = partition(&inst.problem, inst.agents)?;
        let quad: Vec<_> = shards.iter().map(lsq_to_quadratic).collect();
        let mut e_ls = engine(&inst, NoiseChannel::None)?;
        let mut e_q = RoundEngine::from_quadratic(quad, Noise::none())?;
        let d = inst.problem.dim();
        let (mut a, mut b) = (IpgState::new(d, params), IpgState::new(d, params));
        for t in 0..20 {
            a.step(&mut e_ls, None)?;
            b.step(&mut e_q, None)?;
            let rel = a.x.distance(&b.x) / a.x.norm().max(1e-300);
            worst = worst.max(rel);
            if !(rel <= 1e-10) {
                return Ok(Err(format!(
                    "case {case}, t={t}: iterates differ by {rel:.3e}"
                )));
            }
        }
    }
    Ok(Ok(format!("20 runs, worst relative gap {worst:.3e}")))
}

fn isotropic(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    for case in 0..10 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(d..=3 * d);
        let spec = SyntheticSpec {
            n,
            d,
            kappa: 1.0,
            rank: d,
            seed: rng.random(),
        };
        let problem = synthetic_problem(&spec)?;
        let s = spectral_summary(&gram(&problem.a)?, DEFAULT_RANK_TOL)?;
        let inst = Instance {
            gram: gram(&problem.a)?,
            problem,
            summary: s.clone(),
            agents: rng.random_range(1..=n),
        };
        let nominal = 2.0 / (s.lambda1 + s.lambda_d);
        let ipg = IpgParams::new(effective_alpha(nominal, &s, 0.0, opts), 1.0, 0.0)?;
        let rec_ipg = run_ipg(&inst, ipg, None, 1, NoiseChannel::None)?;
        let mut gd = SolverState::init(
            &SolverParams::Gd {
                delta: 2.0 / (s.lambda1 + s.lambda_r),
            },
            &engine(&inst, NoiseChannel::None)?,
        )?;
        let rec_gd = run_traced(
            &mut gd,
            &mut engine(&inst, NoiseChannel::None)?,
            &StopCriteria::default().max_iters(1),
            Reference {
                x_star: inst.problem.x_star.as_ref(),
                k_beta: None,
            },
        )?;
        for (name, rec) in [("IPG", &rec_ipg), ("GD", &rec_gd)] {
            if !(rec.rel_error[1] <= 1e-12) {
                return Ok(Err(format!(
                    "case {case}: {name} error after one step {:.3e}",
                    rec.rel_error[1]
                )));
            }
        }
    }
    Ok(Ok(
        "10 isotropic instances, IPG and GD exact after one step".into(),
    ))
}

fn rank_deficient(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    let mut slowest = 0;
    for case in 0..20 {
        let inst = instance(rng, false, (1.5, 100.0))?;
        let s = &inst.summary;
        let beta = [0.1, 1.0][case % 2];
        let tuned = crate::solvers::tune_ipg(s, beta)?;
        let params = IpgParams::new(
            effective_alpha(tuned.alpha, s, beta, opts),
            tuned.delta,
            beta,
        )?;
        let mut st = SolverState::Ipg(IpgState::new(inst.problem.dim(), params));
        let mut e = engine(&inst, NoiseChannel::None)?;
        let rec = run_traced(
            &mut st,
            &mut e,
            &StopCriteria::default().grad_eps(1e-8).max_iters(2000),
            Reference::default(),
        )?;
        if !(rec.grad_norm.last().copied().unwrap_or(f64::NAN) < 1e-8) {
            return Ok(Err(format!(
                "case {case} (rank {} of {}): gradient {:.3e} after {} iterations",
                s.rank,
                s.dim(),
                rec.grad_norm.last().unwrap(),
                rec.iterations
            )));
        }
        slowest = slowest.max(rec.iterations);
    }
    Ok(Ok(format!(
        "20 rank-deficient runs, slowest took {slowest} iterations"
    )))
}

fn gd_tail(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let inst = instance(rng, true, (20.0, 100.0))?;
        let s = &inst.summary;
        let report = theoretical_rates(s, 0.0, 1.0, 1.0)?;
        let iters = (1e-10f64.ln() / report.mu_gd.ln()).ceil() as usize;
        let mut st = SolverState::init(
            &SolverParams::Gd {
                delta: 2.0 / (s.lambda1 + s.lambda_r),
            },
            &engine(&inst, NoiseChannel::None)?,
        )?;
        let rec = run_traced(
            &mut st,
            &mut engine(&inst, NoiseChannel::None)?,
            &StopCriteria::default().max_iters(iters),
            Reference::default(),
        )?;
        let measured = tail_contraction(&rec.grad_norm, 20).unwrap_or(f64::NAN);
        let gap = (measured - report.mu_gd).abs();
        worst = worst.max(gap);
        if !(gap <= 1e-3) {
            return Ok(Err(format!(
                "case {case}: tail ratio {measured:.6} vs mu_GD {:.6}",
                report.mu_gd
            )));
        }
    }
    Ok(Ok(format!("20 runs, worst |ratio - mu_GD| = {worst:.3e}")))
}

fn optimal_delta(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let lr = rng.random_range(0.01..10.0);
        let l1 = lr * rng.random_range(1.0..1e4);
        let beta = rng.random_range(0.0..20.0);
        let s = SpectralSummary::from_eigenvalues(vec![l1, lr], 0.0)?;
        let r = theoretical_rates(&s, beta, 1.0 / (l1 + beta), 1.0)?;
        let at_crit = mu_of_delta(l1, lr, beta, r.delta_crit);
        let gap = (at_crit - r.mu_star).abs();
        worst = worst.max(gap);
        if !(gap <= 1e-12) {
            return Ok(Err(format!(
                "case {case}: mu(delta_crit) = {at_crit:.17} vs mu* = {:.17}",
                r.mu_star
            )));
        }
        let delta = rng.random_range(0.0..2.0 * (l1 + beta) / l1);
        if mu_of_delta(l1, lr, beta, delta) < r.mu_star - 1e-12 {
            return Ok(Err(format!("case {case}: mu({delta}) below mu*")));
        }
    }
    Ok(Ok(format!("200 spectra, worst gap {worst:.3e}")))
}

fn noise_bound(rng: &mut ChaCha8Rng, opts: &CheckOptions) -> Outcome {
    let d = 3;
    let spec = SyntheticSpec {
        n: 12,
        d,
        kappa: 1.7,
        rank: d,
        seed: rng.random(),
    };
    let problem = synthetic_problem(&spec)?;
    let g = gram(&problem.a)?;
    let s = spectral_summary(&g, DEFAULT_RANK_TOL)?;
    let inst = Instance {
        problem,
        gram: g,
        summary: s.clone(),
        agents: 3,
    };
    let nominal = 2.0 / (s.lambda1 + s.lambda_d);
    let channel = NoiseChannel::AdditiveUniform {
        lo: -1e-4,
        hi: 1e-4,
        seed: rng.random(),
    };
    let w = channel.norm_bound(d);
    let kb = k_beta(&inst.gram, 0.0)?;
    let dists = column_distances(&DenseMatrix::zeros(d, d), &kb)?;
    let report = noise_diagnostics(&dists, &s, nominal, w, 1000)?;
    let Some(bound) = report.asymptotic_bound else {
        return Ok(Err(format!(
            "instance does not meet the conditions (w = {w:.3e}, w_bd = {:.3e})",
            report.w_bd
        )));
    };
    let params = IpgParams::new(effective_alpha(nominal, &s, 0.0, opts), 1.0, 0.0)?;
    let rec = run_ipg(&inst, params, None, 600, channel)?;
    if rec.diverged() {
        return Ok(Err(format!("run stopped early: {}", rec.stop_reason)));
    }
    let abs = rec.abs_error();
    let tail = abs[abs.len() - 100..].iter().copied().fold(0.0, f64::max);
    if tail <= bound {
        Ok(Ok(format!("tail error {tail:.3e} <= bound {bound:.3e}")))
    } else {
        Ok(Err(format!("tail error {tail:.3e} > bound {bound:.3e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_default_seed() {
        for r in run_checks(&CheckOptions::default()) {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn inflated_alpha_breaks_contraction() {
        let r = run_suite(
            'a',
            &CheckOptions {
                seed: 1,
                alpha_inflation: Some(1.5),
            },
        );
        assert!(!r.pass, "{r}");
    }
}
