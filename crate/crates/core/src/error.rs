use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix has a negative eigenvalue {value:e} beyond tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("iterates became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("line search found no decrease after {0} reductions")]
    LineSearch(usize),

    #[error("{solver} is not applicable: {reason}")]
    Inapplicable {
        solver: &'static str,
        reason: String,
    },

    #[error("matrix market {path}:{line}: {msg}")]
    MatrixMarket {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("matrix market file {0} holds complex entries, which are not supported")]
    ComplexField(PathBuf),

    #[error("matrix market file {0} holds a pattern matrix without values")]
    PatternField(PathBuf),

    #[error("config: {0}")]
    Config(String),

    #[error("download failed: {0}")]
    Fetch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
