use plsr_core::Error;
use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Bad arguments or an impossible request.
pub const EXIT_USAGE: u8 = 2;
/// Unreadable, unwritable or malformed inputs and outputs.
pub const EXIT_DATA: u8 = 3;
/// The numerical method itself failed.
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Core(e) if e.is_numeric_failure() => EXIT_NUMERIC,
            CliError::Core(
                Error::InvalidRank { .. }
                | Error::InvalidConfig(_)
                | Error::InvalidBand { .. }
                | Error::NonIntegerDecimation { .. }
                | Error::InvalidFolds { .. },
            ) => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
