//! Command errors and their process exit codes.

use expoly_core::error::{Error, Stage, StageError};
use thiserror::Error as ThisError;

/// Exit code for a verification run that found residuals above tolerance.
pub const EXIT_VERIFY_FAIL: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_COVERAGE: u8 = 3;
pub const EXIT_MULT_BOUND: u8 = 4;
pub const EXIT_CLUSTERING: u8 = 5;
pub const EXIT_SOLVE: u8 = 6;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(Error),
    #[error("{0}")]
    Pipeline(StageError),
}

impl CliError {
    pub fn parse(msg: impl Into<String>) -> Self {
        CliError::Parse(msg.into())
    }

    /// For coverage failures, the smallest box from the origin that holds
    /// the missing sample.
    pub fn coverage_hint(&self) -> Option<String> {
        let missing = match self {
            CliError::Core(Error::Coverage(a)) => a,
            CliError::Pipeline(StageError {
                error: Error::Coverage(a),
                ..
            }) => a,
            _ => return None,
        };
        let ranges: Vec<String> = missing.entries().iter().map(|&a| format!("0..{a}")).collect();
        Some(format!(
            "the sample box must extend at least to box:{}; larger multiplicity bounds need more",
            ranges.join(",")
        ))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => EXIT_PARSE,
            CliError::Core(e) => core_code(e, None),
            CliError::Pipeline(e) => core_code(&e.error, Some(e.stage)),
        }
    }
}

fn core_code(e: &Error, stage: Option<Stage>) -> u8 {
    match e {
        Error::Coverage(_) => EXIT_COVERAGE,
        Error::MultiplicityBoundTooSmall { .. } => EXIT_MULT_BOUND,
        Error::Clustering { .. } => EXIT_CLUSTERING,
        Error::Solve(_) => EXIT_SOLVE,
        _ => match stage {
            Some(Stage::Ideal) => EXIT_MULT_BOUND,
            Some(Stage::Tables | Stage::Eigen | Stage::Frequencies) => EXIT_CLUSTERING,
            Some(Stage::System | Stage::Solve) => EXIT_SOLVE,
            None => EXIT_PARSE,
        },
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<StageError> for CliError {
    fn from(e: StageError) -> Self {
        CliError::Pipeline(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            other => CliError::Parse(format!("CSV: {other:?}")),
        }
    }
}
