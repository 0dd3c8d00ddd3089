use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::problem::SyntheticSpec;
use crate::protocol::NoiseChannel;
use crate::solvers::SolverKind;

use super::datasets::{data_dir, resolve_dataset, DatasetSource};

/// Optional per-solver overrides, e.g. `[nag] delta = 0.01`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpgOverride {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepOverride {
    pub delta: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApcOverride {
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    /// `updated` or `received`.
    pub average: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfgsOverride {
    /// `backtracking` or `exact`.
    pub line_search: Option<String>,
    pub armijo_c: Option<f64>,
    pub shrink: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_reductions: Option<usize>,
    /// Upper end of the default uniform noise in the noise study.
    pub noise_hi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverOverrides {
    pub ipg: Option<IpgOverride>,
    pub gd: Option<StepOverride>,
    pub nag: Option<StepOverride>,
    pub hbm: Option<StepOverride>,
    pub apc: Option<ApcOverride>,
    pub bfgs: Option<BfgsOverride>,
}

/// Every setting as an option, read from a TOML file or from flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub dataset: Option<String>,
    pub synthetic: Option<String>,
    pub agents: Option<usize>,
    pub solvers: Option<String>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub noise: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// `tuned` or `table`.
    pub params: Option<String>,
    pub stall_window: Option<usize>,
    pub stall_tol: Option<f64>,
    pub data_dir: Option<PathBuf>,
    pub ipg: Option<IpgOverride>,
    pub gd: Option<StepOverride>,
    pub nag: Option<StepOverride>,
    pub hbm: Option<StepOverride>,
    pub apc: Option<ApcOverride>,
    pub bfgs: Option<BfgsOverride>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` win. A dataset choice in `top` replaces both
    /// dataset fields of `self`.
    pub fn overlay(mut self, top: Settings) -> Settings {
        if top.dataset.is_some() || top.synthetic.is_some() {
            self.dataset = top.dataset;
            self.synthetic = top.synthetic;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if top.$f.is_some() { self.$f = top.$f; } )* };
        }
        take!(
            agents,
            solvers,
            tol,
            max_iters,
            noise,
            out,
            seed,
            params,
            stall_window,
            stall_tol,
            data_dir
        );
        take!(ipg, gd, nag, hbm, apc, bfgs);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSource {
    /// Derived from the spectrum (and the local projectors for APC).
    Tuned,
    /// The published per-dataset values.
    Table,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub agents: usize,
    pub solvers: Vec<SolverKind>,
    pub params: ParamSource,
    pub overrides: SolverOverrides,
    pub tol: f64,
    pub max_iters: usize,
    /// `None` means per-solver defaults in the noise study and no noise
    /// otherwise.
    pub noise: Option<NoiseChannel>,
    pub out: PathBuf,
    pub seed: u64,
    pub stall_window: usize,
    pub stall_tol: f64,
}

pub const DEFAULT_AGENTS: usize = 10;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

impl ExperimentConfig {
    pub fn from_settings(s: Settings) -> Result<Self> {
        let dir = s.data_dir.clone().unwrap_or_else(data_dir);
        let dataset = match (&s.dataset, &s.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either a dataset or a synthetic spec".into(),
                ))
            }
            (Some(d), None) => resolve_dataset(d, &dir)?,
            (None, Some(spec)) => DatasetSource::Synthetic(SyntheticSpec::parse(spec)?),
            (None, None) => {
                return Err(Error::Config(
                    "no dataset given (--dataset or --synthetic)".into(),
                ))
            }
        };
        let agents = s.agents.unwrap_or(DEFAULT_AGENTS);
        if agents == 0 {
            return Err(Error::Config("agent count must be at least 1".into()));
        }
        let solvers = SolverKind::parse_list(s.solvers.as_deref().unwrap_or("all"))?;
        let params = match s.params.as_deref().unwrap_or("tuned") {
            "tuned" => ParamSource::Tuned,
            "table" => ParamSource::Table,
            other => {
                return Err(Error::Config(format!(
                    "params must be `tuned` or `table`, got `{other}`"
                )))
            }
        };
        let tol = s.tol.unwrap_or(DEFAULT_TOL);
        if !(tol >= 0.0) {
            return Err(Error::Config(format!(
                "tolerance {tol} must be non-negative"
            )));
        }
        let seed = s.seed.unwrap_or(0);
        let noise = s
            .noise
            .as_deref()
            .map(|n| parse_noise(n, seed))
            .transpose()?;
        let stall_tol = s.stall_tol.unwrap_or(crate::analysis::DEFAULT_STALL_TOL);
        Ok(ExperimentConfig {
            dataset,
            agents,
            solvers,
            params,
            overrides: SolverOverrides {
                ipg: s.ipg,
                gd: s.gd,
                nag: s.nag,
                hbm: s.hbm,
                apc: s.apc,
                bfgs: s.bfgs,
            },
            tol,
            max_iters: s.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            noise,
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            seed,
            stall_window: s
                .stall_window
                .unwrap_or(crate::analysis::DEFAULT_STALL_WINDOW),
            stall_tol,
        })
    }
}

/// Like `NoiseChannel::from_str`, but a uniform spec without a seed takes
/// `default_seed`.
pub fn parse_noise(text: &str, default_seed: u64) -> Result<NoiseChannel> {
    let c: NoiseChannel = text.parse()?;
    Ok(match c {
        NoiseChannel::AdditiveUniform { lo, hi, .. } if text.matches(',').count() == 1 => {
            NoiseChannel::AdditiveUniform {
                lo,
                hi,
                seed: default_seed,
            }
        }
        c => c,
    })
}
