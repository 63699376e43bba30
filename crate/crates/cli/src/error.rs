use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Violation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for config and other failures, 2 for violations, 3 for NaN/inf.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Runtime(_) => 1,
            CliError::Violation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<scion_core::Error> for CliError {
    fn from(e: scion_core::Error) -> Self {
        match e {
            scion_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
