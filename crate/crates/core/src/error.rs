//! Crate-wide error type and result alias.

use thiserror::Error;

use crate::evolution::TimeGridFunction;

/// Everything that can go wrong across the solver and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A kernel sample evaluated to a non-finite value.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// No interior grid node falls inside the requested control region.
    #[error("empty control region: no interior node lies in ({0}, {1})")]
    EmptyControlRegion(f64, f64),

    /// A per-step linear system is singular or numerically unusable.
    #[error("singular operator: {0}")]
    SingularOperator(String),

    /// The iterative solver exhausted its iteration budget. The last
    /// iterate is kept so callers can inspect or resume from it.
    #[error(
        "solver did not converge: relative residual {residual:.3e} after {iterations} iterations (tolerance {tol:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
        last_iterate: Box<TimeGridFunction>,
    },

    /// The experiment configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// An input artifact (e.g. a control CSV) has the wrong shape or
    /// contains unparseable data.
    #[error("format error: {0}")]
    Format(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for solver non-convergence, 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::InvalidKernel(_)
            | Error::EmptyControlRegion(..)
            | Error::SingularOperator(_)
            | Error::Config(_)
            | Error::Format(_) => 2,
            Error::NonConvergence { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
