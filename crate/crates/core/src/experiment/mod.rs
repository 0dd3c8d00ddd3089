//! Experiment plumbing behind the command-line tool: dataset resolution,
//! parameter selection, solver comparison, the noise study and CSV output.

pub mod check;
mod config;
mod datasets;

pub use check::{run_checks, CheckOptions, SuiteResult};
pub use config::{
    parse_noise, ApcOverride, BfgsOverride, ExperimentConfig, IpgOverride, ParamSource, Settings,
    SolverOverrides, StepOverride, DEFAULT_AGENTS, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
pub use datasets::{
    data_dir, dataset_info, fetch_dataset, load_dataset, resolve_dataset, DatasetInfo,
    DatasetSource, TableParams, DATASETS,
};

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::analysis::{asymptotic_error, iterations_to_tolerance, AsymptoticError};
use crate::error::{Error, Result};
use crate::linalg::{gram, spectral_summary, DenseMatrix, SpectralSummary, DEFAULT_RANK_TOL};
use crate::problem::LeastSquaresProblem;
use crate::protocol::{Noise, NoiseChannel, RoundEngine};
use crate::solvers::{
    apc_init, run_traced, tune, tune_apc, tune_ipg, ApcAverage, ApcParams, IpgParams, LineSearch,
    Reference, RunRecord, SolverKind, SolverParams, SolverState, StopCriteria,
};

/// A loaded problem with its spectrum.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub name: String,
    pub problem: LeastSquaresProblem,
    pub gram: DenseMatrix,
    pub summary: SpectralSummary,
    pub info: Option<&'static DatasetInfo>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let problem = load_dataset(&cfg.dataset)?;
    if cfg.agents > problem.rows() {
        return Err(Error::Config(format!(
            "{} agents for {} rows",
            cfg.agents,
            problem.rows()
        )));
    }
    let g = gram(&problem.a)?;
    let summary = spectral_summary(&g, DEFAULT_RANK_TOL)?;
    Ok(Prepared {
        name: cfg.dataset.name(),
        problem,
        gram: g,
        summary,
        info: cfg.dataset.info(),
    })
}

impl Prepared {
    pub fn engine(&self, agents: usize, noise: NoiseChannel) -> Result<RoundEngine> {
        RoundEngine::from_problem(&self.problem, agents, Noise::new(noise)?)
    }
}

fn table(prep: &Prepared) -> Result<TableParams> {
    prep.info
        .map(|i| i.table)
        .ok_or_else(|| Error::Config(format!("no published parameters for `{}`", prep.name)))
}

fn parse_average(text: &str) -> Result<ApcAverage> {
    match text {
        "updated" => Ok(ApcAverage::Updated),
        "received" => Ok(ApcAverage::Received),
        other => Err(Error::Config(format!(
            "APC average must be `updated` or `received`, got `{other}`"
        ))),
    }
}

fn line_search(o: Option<&BfgsOverride>) -> Result<LineSearch> {
    let Some(o) = o else {
        return Ok(LineSearch::default());
    };
    match o.line_search.as_deref().unwrap_or("backtracking") {
        "exact" => Ok(LineSearch::Exact),
        "backtracking" => {
            let LineSearch::Backtracking {
                armijo_c,
                shrink,
                initial_step,
                max_reductions,
            } = LineSearch::default()
            else {
                unreachable!()
            };
            Ok(LineSearch::Backtracking {
                armijo_c: o.armijo_c.unwrap_or(armijo_c),
                shrink: o.shrink.unwrap_or(shrink),
                initial_step: o.initial_step.unwrap_or(initial_step),
                max_reductions: o.max_reductions.unwrap_or(max_reductions),
            })
        }
        other => Err(Error::Config(format!(
            "line search must be `backtracking` or `exact`, got `{other}`"
        ))),
    }
}

/// Builds the initial state of `kind` with parameters from the configured
/// source and overrides.
pub fn init_solver(
    kind: SolverKind,
    prep: &Prepared,
    cfg: &ExperimentConfig,
    engine: &RoundEngine,
) -> Result<SolverState> {
    let s = &prep.summary;
    let o = &cfg.overrides;
    let step = |o: Option<&StepOverride>, (delta, eta): (f64, f64)| {
        let o = o.copied().unwrap_or_default();
        (o.delta.unwrap_or(delta), o.eta.unwrap_or(eta))
    };
    let params = match kind {
        SolverKind::Ipg => {
            let ov = o.ipg.unwrap_or_default();
            let beta = ov.beta.unwrap_or(0.0);
            let base = match cfg.params {
                ParamSource::Tuned => tune_ipg(s, beta)?,
                ParamSource::Table => {
                    let (alpha, delta) = table(prep)?.ipg;
                    IpgParams::new(alpha, delta, beta)?
                }
            };
            SolverParams::Ipg(IpgParams::new(
                ov.alpha.unwrap_or(base.alpha),
                ov.delta.unwrap_or(base.delta),
                beta,
            )?)
        }
        SolverKind::Gd => {
            let delta = match cfg.params {
                ParamSource::Tuned => match tune(kind, s)? {
                    SolverParams::Gd { delta } => delta,
                    _ => unreachable!(),
                },
                ParamSource::Table => table(prep)?.gd_delta,
            };
            SolverParams::Gd {
                delta: o.gd.and_then(|g| g.delta).unwrap_or(delta),
            }
        }
        SolverKind::Nag | SolverKind::Hbm => {
            let base = match cfg.params {
                ParamSource::Tuned => match tune(kind, s)? {
                    SolverParams::Nag { delta, eta } | SolverParams::Hbm { delta, eta } => {
                        (delta, eta)
                    }
                    _ => unreachable!(),
                },
                ParamSource::Table if kind == SolverKind::Nag => table(prep)?.nag,
                ParamSource::Table => table(prep)?.hbm,
            };
            if kind == SolverKind::Nag {
                let (delta, eta) = step(o.nag.as_ref(), base);
                SolverParams::Nag { delta, eta }
            } else {
                let (delta, eta) = step(o.hbm.as_ref(), base);
                SolverParams::Hbm { delta, eta }
            }
        }
        SolverKind::Apc => {
            let mut state = apc_init(engine.shards(), ApcParams::new(1.0, 1.0)?)?;
            let base = match cfg.params {
                ParamSource::Tuned => tune_apc(&state.projections)?,
                ParamSource::Table => {
                    let (gamma, eta) = table(prep)?.apc;
                    ApcParams::new(gamma, eta)?
                }
            };
            let ov = o.apc.clone().unwrap_or_default();
            let mut p = ApcParams::new(ov.gamma.unwrap_or(base.gamma), ov.eta.unwrap_or(base.eta))?;
            if let Some(a) = ov.average.as_deref() {
                p = p.with_average(parse_average(a)?);
            }
            state.gamma = p.gamma;
            state.eta_apc = p.eta;
            state.average = p.average;
            return Ok(SolverState::Apc(state));
        }
        SolverKind::Bfgs => SolverParams::Bfgs(line_search(o.bfgs.as_ref())?),
    };
    SolverState::init(&params, engine)
}

/// Noise used for `kind` in the noise study when none is configured.
pub fn default_noise(kind: SolverKind, prep: &Prepared, cfg: &ExperimentConfig) -> NoiseChannel {
    match kind {
        SolverKind::Ipg | SolverKind::Gd | SolverKind::Nag | SolverKind::Hbm => {
            NoiseChannel::RoundDecimals(4)
        }
        SolverKind::Apc => NoiseChannel::AdditiveUniform {
            lo: 0.0,
            hi: 1e-6,
            seed: cfg.seed,
        },
        SolverKind::Bfgs => {
            let hi = cfg
                .overrides
                .bfgs
                .as_ref()
                .and_then(|b| b.noise_hi)
                .or(prep.info.map(|i| i.bfgs_noise_hi))
                .unwrap_or(1e-6);
            NoiseChannel::AdditiveUniform {
                lo: 0.0,
                hi,
                seed: cfg.seed,
            }
        }
    }
}

/// One line of a result table.
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub solver: SolverKind,
    pub noise: NoiseChannel,
    /// `None` when the solver could not be set up.
    pub params: Option<SolverParams>,
    pub iterations_to_tol: Option<usize>,
    pub final_rel_error: Option<f64>,
    pub asymptotic: Option<AsymptoticError>,
    /// The error ended far above its minimum, or the run broke down.
    pub unbounded_growth: bool,
    /// Stop reason, or `N/A: ...` for an inapplicable solver.
    pub status: String,
    pub record: Option<RunRecord>,
}

impl ResultRow {
    fn not_applicable(solver: SolverKind, noise: NoiseChannel, reason: &Error) -> Self {
        ResultRow {
            solver,
            noise,
            params: None,
            iterations_to_tol: None,
            final_rel_error: None,
            asymptotic: None,
            unbounded_growth: false,
            status: format!("N/A: {reason}"),
            record: None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.record.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    pub dataset: String,
    pub tol: f64,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, kind: SolverKind) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.solver == kind)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "solver,status,iterations_to_tolerance,final_rel_error,asymptotic_error,asymptotic_converged,unbounded_growth,noise,params\n",
        );
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.solver.id(),
                r.status.replace(',', ";"),
                r.iterations_to_tol
                    .map(|t| t.to_string())
                    .unwrap_or_default(),
                opt(r.final_rel_error),
                opt(r.asymptotic.map(|a| a.abs)),
                r.asymptotic
                    .map(|a| a.converged.to_string())
                    .unwrap_or_default(),
                r.unbounded_growth,
                r.noise,
                r.params.map(|p| p.to_string()).unwrap_or_default(),
            ));
        }
        s
    }

    /// Writes `summary.csv` and one `trace_<solver>.csv` per run.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        for r in &self.rows {
            if let Some(rec) = &r.record {
                write_trace(&dir.join(format!("trace_{}.csv", r.solver.id())), rec)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dataset {} (tolerance {:e})", self.dataset, self.tol)?;
        writeln!(
            f,
            "{:<6} {:>10} {:>14} {:>14}  {}",
            "solver", "iters", "final rel err", "asymptotic", "status"
        )?;
        for r in &self.rows {
            let iters = r
                .iterations_to_tol
                .map(|t| t.to_string())
                .unwrap_or_else(|| "-".into());
            let fin = r
                .final_rel_error
                .map(|v| format!("{v:.4e}"))
                .unwrap_or_else(|| "-".into());
            let asym = match r.asymptotic {
                Some(a) if a.converged => format!("{:.4e}", a.abs),
                Some(a) => format!("~{:.4e}", a.abs),
                None => "-".into(),
            };
            let growth = if r.unbounded_growth {
                " [unbounded growth]"
            } else {
                ""
            };
            writeln!(
                f,
                "{:<6} {:>10} {:>14} {:>14}  {}{}",
                r.solver.to_string(),
                iters,
                fin,
                asym,
                r.status,
                growth
            )?;
        }
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(rec: &RunRecord) -> String {
    let mut s = String::with_capacity(48 * rec.grad_norm.len() + 32);
    s.push_str("iter,grad_norm,rel_error\n");
    for (t, g) in rec.grad_norm.iter().enumerate() {
        let e = rec
            .rel_error
            .get(t)
            .map(|e| fmt_f64(*e))
            .unwrap_or_default();
        s.push_str(&format!("{t},{},{e}\n", fmt_f64(*g)));
    }
    s
}

pub fn write_trace(path: &Path, rec: &RunRecord) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    f.write_all(trace_csv(rec).as_bytes())?;
    f.flush()?;
    Ok(())
}

/// A run grows without bound when it diverged or broke down, or when its
/// error ends above both the starting error and ten times its minimum and
/// is still rising: the mean over the last tenth of the trace is more than
/// twice the mean over the tenth before it.
fn growth(rec: &RunRecord) -> bool {
    if rec.diverged() {
        return true;
    }
    let e = &rec.rel_error;
    let Some(&last) = e.last() else {
        return false;
    };
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    if !(last > 10.0 * min && last > e[0]) {
        return false;
    }
    let w = (e.len() / 10).max(1);
    if e.len() < 2 * w {
        return false;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    mean(&e[e.len() - w..]) > 2.0 * mean(&e[e.len() - 2 * w..e.len() - w])
}

/// Runs one solver on a fresh engine.
pub fn run_solver(
    kind: SolverKind,
    prep: &Prepared,
    cfg: &ExperimentConfig,
    noise: NoiseChannel,
    stop: &StopCriteria,
) -> ResultRow {
    let setup = prep
        .engine(cfg.agents, noise)
        .and_then(|e| init_solver(kind, prep, cfg, &e).map(|s| (e, s)));
    let (mut engine, mut state) = match setup {
        Ok(v) => v,
        Err(e) => return ResultRow::not_applicable(kind, noise, &e),
    };
    let reference = Reference {
        x_star: prep.problem.x_star.as_ref(),
        k_beta: None,
    };
    let rec = match run_traced(&mut state, &mut engine, stop, reference) {
        Ok(r) => r,
        Err(e) => return ResultRow::not_applicable(kind, noise, &e),
    };
    let asymptotic = stop
        .stall
        .and_then(|(w, tol)| asymptotic_error(&rec, w, tol).ok());
    ResultRow {
        solver: kind,
        noise,
        params: Some(rec.params),
        iterations_to_tol: iterations_to_tolerance(&rec, cfg.tol),
        final_rel_error: rec.rel_error.last().copied(),
        asymptotic,
        unbounded_growth: growth(&rec),
        status: rec.stop_reason.to_string(),
        record: Some(rec),
    }
}

/// Runs every configured solver to the tolerance from identical starts.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let prep = prepare(cfg)?;
    let table = compare_prepared(&prep, cfg);
    table.write(&cfg.out)?;
    Ok(table)
}

pub fn compare_prepared(prep: &Prepared, cfg: &ExperimentConfig) -> ResultTable {
    let noise = cfg.noise.unwrap_or(NoiseChannel::None);
    let stop = StopCriteria::default()
        .rel_err_eps(cfg.tol)
        .max_iters(cfg.max_iters);
    let rows = cfg
        .solvers
        .iter()
        .map(|&k| run_solver(k, prep, cfg, noise, &stop))
        .collect();
    ResultTable {
        dataset: prep.name.clone(),
        tol: cfg.tol,
        rows,
    }
}

/// Runs every configured solver under persistent noise until its error
/// stalls, and reports the stalled level.
pub fn cmd_noise(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let prep = prepare(cfg)?;
    let table = noise_prepared(&prep, cfg);
    table.write(&cfg.out)?;
    Ok(table)
}

pub fn noise_prepared(prep: &Prepared, cfg: &ExperimentConfig) -> ResultTable {
    let rows = cfg
        .solvers
        .iter()
        .map(|&k| {
            let noise = cfg.noise.unwrap_or_else(|| default_noise(k, prep, cfg));
            let stop = if noise.is_none() {
                StopCriteria::default()
                    .rel_err_eps(cfg.tol)
                    .max_iters(cfg.max_iters)
            } else {
                StopCriteria::default()
                    .stall(cfg.stall_window, cfg.stall_tol)
                    .max_iters(cfg.max_iters)
            };
            let mut row = run_solver(k, prep, cfg, noise, &stop);
            if noise.is_none() {
                row.asymptotic = row
                    .record
                    .as_ref()
                    .and_then(|r| asymptotic_error(r, cfg.stall_window, cfg.stall_tol).ok());
            }
            row
        })
        .collect();
    ResultTable {
        dataset: prep.name.clone(),
        tol: cfg.tol,
        rows,
    }
}

/// Spectrum of `AᵀA` and the tuned parameters per solver.
#[derive(Clone, Debug)]
pub struct SpectraReport {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub summary: SpectralSummary,
    pub tuned: Vec<(SolverKind, std::result::Result<SolverParams, String>)>,
}

pub fn cmd_spectra(cfg: &ExperimentConfig) -> Result<SpectraReport> {
    let prep = prepare(cfg)?;
    let tuned_cfg = ExperimentConfig {
        params: ParamSource::Tuned,
        ..cfg.clone()
    };
    let engine = prep.engine(cfg.agents, NoiseChannel::None)?;
    let tuned = cfg
        .solvers
        .iter()
        .map(|&k| {
            let p = init_solver(k, &prep, &tuned_cfg, &engine)
                .map(|s| s.params())
                .map_err(|e| e.to_string());
            (k, p)
        })
        .collect();
    Ok(SpectraReport {
        name: prep.name.clone(),
        rows: prep.problem.rows(),
        cols: prep.problem.dim(),
        nnz: prep.problem.a.nnz(),
        summary: prep.summary,
        tuned,
    })
}

impl fmt::Display for SpectraReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.summary;
        writeln!(
            f,
            "{}: {} x {}, {} nonzeros",
            self.name, self.rows, self.cols, self.nnz
        )?;
        writeln!(f, "lambda1  {:.6e}", s.lambda1)?;
        writeln!(f, "lambda_r {:.6e}", s.lambda_r)?;
        writeln!(f, "lambda_d {:.6e}", s.lambda_d)?;
        writeln!(f, "rank     {} of {}", s.rank, s.dim())?;
        let note = if s.row_space_kappa {
            " (row space)"
        } else {
            ""
        };
        writeln!(f, "kappa    {:.6e}{note}", s.kappa)?;
        for (k, p) in &self.tuned {
            match p {
                Ok(p) => writeln!(f, "{:<5} {p}", k.to_string())?,
                Err(e) => writeln!(f, "{:<5} N/A: {e}", k.to_string())?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(spec: &str, dir: &Path) -> ExperimentConfig {
        ExperimentConfig::from_settings(Settings {
            synthetic: Some(spec.into()),
            agents: Some(4),
            out: Some(dir.to_path_buf()),
            max_iters: Some(20_000),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn compare_writes_consistent_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("24,6,30,6,3", dir.path());
        let t = cmd_compare(&c).unwrap();
        assert_eq!(t.rows.len(), 6);
        for r in &t.rows {
            let rec = r
                .record
                .as_ref()
                .unwrap_or_else(|| panic!("{} {}", r.solver, r.status));
            let text = fs::read_to_string(dir.path().join(format!("trace_{}.csv", r.solver.id())))
                .unwrap();
            assert!(text.starts_with("iter,grad_norm,rel_error\n"));
            assert!(!text.contains('\r'));
            assert_eq!(text.lines().count(), rec.iterations + 2);
            // Recompute iterations-to-tolerance from the file.
            let from_file = text
                .lines()
                .skip(1)
                .position(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() <= c.tol);
            assert_eq!(from_file, r.iterations_to_tol, "{}", r.solver);
        }
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 7);
    }

    #[test]
    fn isotropic_one_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg("16,4,1,4,2", dir.path());
        c.solvers = vec![SolverKind::Gd, SolverKind::Ipg];
        let t = compare_prepared(&prepare(&c).unwrap(), &c);
        assert_eq!(t.row(SolverKind::Gd).unwrap().iterations_to_tol, Some(1));
        assert_eq!(t.row(SolverKind::Ipg).unwrap().iterations_to_tol, Some(1));
    }

    #[test]
    fn too_many_agents_fails_early() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg("6,3,2,3,1", dir.path());
        c.agents = 7;
        assert!(cmd_compare(&c).is_err());
        assert!(!dir.path().join("summary.csv").exists());
    }

    #[test]
    fn inapplicable_apc_is_marked() {
        let dir = tempfile::tempdir().unwrap();
        // 2 agents with 10 rows each in 4 unknowns: not full row rank.
        let mut c = cfg("20,4,5,4,1", dir.path());
        c.agents = 2;
        let t = compare_prepared(&prepare(&c).unwrap(), &c);
        let apc = t.row(SolverKind::Apc).unwrap();
        assert!(apc.status.starts_with("N/A"), "{}", apc.status);
        assert!(t.summary_csv().contains("apc,N/A"));
        assert!(t.row(SolverKind::Ipg).unwrap().is_applicable());
    }

    #[test]
    fn noise_none_matches_compare() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg("30,5,20,5,4", dir.path());
        c.noise = Some(NoiseChannel::None);
        let prep = prepare(&c).unwrap();
        let a = compare_prepared(&prep, &c);
        let b = noise_prepared(&prep, &c);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(
                x.record.as_ref().map(trace_csv),
                y.record.as_ref().map(trace_csv)
            );
        }
    }

    #[test]
    fn spectra_identity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("eye.mtx");
        fs::write(
            &p,
            "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n",
        )
        .unwrap();
        let c = ExperimentConfig::from_settings(Settings {
            dataset: Some(p.to_string_lossy().into_owned()),
            agents: Some(1),
            ..Default::default()
        })
        .unwrap();
        let r = cmd_spectra(&c).unwrap();
        assert_eq!(r.summary.kappa, 1.0);
        assert!(r.to_string().contains("kappa"));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
