use std::path::PathBuf;

use thiserror::Error;

use crate::bayesopt::LearnTrace;
use crate::tntp::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("simplex made no progress after {pivots} pivots (degenerate cycling cap)")]
    NumericalDegeneracy { pivots: usize },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded: {0}")]
    Unbounded(String),

    #[error("lp backend failure: {0}")]
    LpBackend(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative flow {value} on link {link}")]
    NegativeFlow { link: usize, value: f64 },

    #[error("player {player}: {source}")]
    Player {
        player: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "kernel matrix is not positive definite ({n} observations, noise sigma {noise}); \
         duplicate inputs need a positive noise sigma or jitter"
    )]
    NotPositiveDefinite { n: usize, noise: f64 },

    #[error("oracle query {iteration} failed: {source}")]
    QueryFailed {
        iteration: usize,
        partial: Box<LearnTrace>,
        #[source]
        source: Box<Error>,
    },

    #[error("monte carlo run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("config {path}: line {line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("basis file line {line}: {message}")]
    BasisFormat { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn for_player(self, player: usize) -> Self {
        Error::Player {
            player,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
