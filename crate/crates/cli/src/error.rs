use thiserror::Error;

/// Failure classes of the runner, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("estimator infeasible: {0}")]
    Infeasible(rescal_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<rescal_core::Error> for CliError {
    fn from(e: rescal_core::Error) -> Self {
        use rescal_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::InvalidChart(_) | E::ChartMismatch { .. } | E::Domain(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Infeasible(other),
        }
    }
}
