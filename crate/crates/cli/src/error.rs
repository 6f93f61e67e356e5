use spde_milstein::SpdeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("stability check failed: {0}; pass --force to run anyway")]
    Unstable(String),

    #[error(transparent)]
    Model(#[from] SpdeError),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 argument error, 3 stability violation, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Unstable(_) => 3,
            CliError::Model(e) => match e.root_cause() {
                SpdeError::Domain(_) => 2,
                _ => 4,
            },
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
