use thiserror::Error;
use wvsim_core::WvError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Math(#[from] WvError),

    #[error("oracle disagreement: {0}")]
    OracleDisagreement(String),
}

impl CliError {
    /// 0 success, 1 usage/config, 2 math domain, 3 oracle disagreement.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Math(e) if e.is_math_domain() => 2,
            CliError::Math(_) => 1,
            CliError::OracleDisagreement(_) => 3,
        }
    }
}
