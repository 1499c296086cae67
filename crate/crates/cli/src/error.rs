use std::path::Path;
use std::process::ExitCode;

use sldx_core::corpus::CorpusError;
use sldx_gateway::GatewayError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_MALFORMED: u8 = 2;
pub const EXIT_DEGRADED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A well-formed request that cannot be satisfied.
    #[error("{0}")]
    Domain(String),
    /// Missing, unreadable or malformed input.
    #[error("{0}")]
    Malformed(String),
    /// The batch finished but more than half of its requests failed.
    #[error("{0}")]
    Degraded(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Malformed(_) => EXIT_MALFORMED,
            CliError::Degraded(_) => EXIT_DEGRADED,
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    pub fn malformed(msg: impl Into<String>) -> Self {
        CliError::Malformed(msg.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Malformed(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Malformed(e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::InvalidScript(_) | GatewayError::InvalidConfig(_) | GatewayError::CacheIo { .. } => {
                CliError::Malformed(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn exit_code(result: CliResult) -> ExitCode {
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
