use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ipgd::experiment::{
    cmd_compare, cmd_noise, cmd_spectra, data_dir, fetch_dataset, run_checks, CheckOptions,
    ExperimentConfig, Settings, DATASETS,
};

#[derive(Parser)]
#[command(
    name = "ipgd",
    version,
    about = "Distributed least-squares solvers: runs, comparisons and checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the spectrum of AᵀA and the tuned parameters.
    Spectra(RunArgs),
    /// Run solvers to the tolerance and write trace and summary CSVs.
    Compare(RunArgs),
    /// Run solvers under persistent noise and report asymptotic errors.
    Noise(RunArgs),
    /// Run the randomized property suites.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Run IPG with α = F·2/(λ1+β) while checking against the nominal α.
        #[arg(long, value_name = "F", hide = true)]
        inflate_alpha: Option<f64>,
    },
    /// Download collection matrices into the data directory.
    Fetch {
        /// Dataset names; all known ones when omitted.
        names: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Matrix Market file or collection name.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<String>,
    /// Synthetic problem `N,d,kappa,rank,seed`.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    agents: Option<usize>,
    /// Comma-separated solver list, or `all`.
    #[arg(long)]
    solvers: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// `none`, `round:K` or `uniform:LO,HI[,SEED]`.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `tuned` or `table`.
    #[arg(long)]
    params: Option<String>,
}

impl RunArgs {
    fn config(self) -> ipgd::error::Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let flags = Settings {
            dataset: self.dataset,
            synthetic: self.synthetic,
            agents: self.agents,
            solvers: self.solvers,
            tol: self.tol,
            max_iters: self.max_iters,
            noise: self.noise,
            out: self.out,
            seed: self.seed,
            params: self.params,
            ..Default::default()
        };
        ExperimentConfig::from_settings(base.overlay(flags))
    }
}

fn run(cli: Cli) -> ipgd::error::Result<bool> {
    match cli.cmd {
        Command::Spectra(a) => {
            print!("{}", cmd_spectra(&a.config()?)?);
        }
        Command::Compare(a) => {
            let cfg = a.config()?;
            print!("{}", cmd_compare(&cfg)?);
            println!("wrote {}", cfg.out.display());
        }
        Command::Noise(a) => {
            let cfg = a.config()?;
            print!("{}", cmd_noise(&cfg)?);
            println!("wrote {}", cfg.out.display());
        }
        Command::Check {
            seed,
            inflate_alpha,
        } => {
            let results = run_checks(&CheckOptions {
                seed,
                alpha_inflation: inflate_alpha,
            });
            for r in &results {
                println!("{r}");
            }
            return Ok(results.iter().all(|r| r.pass));
        }
        Command::Fetch { names, out } => {
            let dir = out.unwrap_or_else(data_dir);
            let names: Vec<String> = if names.is_empty() {
                DATASETS.iter().map(|d| d.name.to_string()).collect()
            } else {
                names
            };
            let mut ok = true;
            for n in names {
                match fetch_dataset(&n, &dir) {
                    Ok(p) => println!("{n}: {}", p.display()),
                    Err(e) => {
                        eprintln!("{n}: {e}");
                        ok = false;
                    }
                }
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
