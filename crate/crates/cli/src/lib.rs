//! Command-line driver: census, single-function inspection, probability
//! evaluation through compiled circuits, and the census table.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use hquery::census::CensusError;
use hquery::compile::{CompileError, DbError};
use hquery::niceness::NicenessError;
use hquery::sat::SatError;

pub use args::{Cli, Command};
pub use commands::{run, Output};
pub use config::RunConfig;
pub use report::Report;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const SOLVER_UNKNOWN: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const UNSUPPORTED: i32 = 4;
    pub const CHECK_FAILED: i32 = 5;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver gave no answer: {0}")]
    SolverUnknown(String),
    #[error("{0}")]
    Budget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse(_) | CliError::Config(_) => exit::USAGE,
            CliError::SolverUnknown(_) => exit::SOLVER_UNKNOWN,
            CliError::Budget(_) => exit::BUDGET,
            CliError::Unsupported(_) => exit::UNSUPPORTED,
            CliError::CheckFailed(_) => exit::CHECK_FAILED,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<SatError> for CliError {
    fn from(e: SatError) -> Self {
        CliError::SolverUnknown(e.to_string())
    }
}

impl From<NicenessError> for CliError {
    fn from(e: NicenessError) -> Self {
        match e {
            NicenessError::Solver(s) => s.into(),
            other => CliError::CheckFailed(other.to_string()),
        }
    }
}

impl From<CensusError> for CliError {
    fn from(e: CensusError) -> Self {
        match e {
            CensusError::Io { path, source } => CliError::Io { path, source },
            CensusError::KOutOfRange(_) | CensusError::LongRunNotEnabled => {
                CliError::Config(e.to_string())
            }
            CensusError::Niceness { func, source } => match source {
                NicenessError::Solver(s) => CliError::SolverUnknown(format!("{func}: {s}")),
                other => CliError::CheckFailed(format!("{func}: {other}")),
            },
            CensusError::Parse(_) => CliError::Io {
                path: PathBuf::new(),
                source: io::Error::new(io::ErrorKind::InvalidData, e.to_string()),
            },
            other => CliError::CheckFailed(other.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            CompileError::Solver(s) => s.into(),
            CompileError::Unsupported(m) => CliError::Unsupported(m),
            CompileError::Db(d) => d.into(),
            other => CliError::CheckFailed(other.to_string()),
        }
    }
}

impl From<DbError> for CliError {
    fn from(e: DbError) -> Self {
        CliError::Parse(e.to_string())
    }
}
