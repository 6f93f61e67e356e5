use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpdeError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Elimination hit a pivot below the guard threshold.
    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    /// The solution became non-finite, which signals an unstable parameter choice.
    #[error("numerical overflow: non-finite solution value at node {node}")]
    Overflow { node: usize },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<SpdeError>,
    },
}

impl SpdeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SpdeError::Domain(msg.into())
    }

    /// Strips any `StepFailed` wrappers.
    pub fn root_cause(&self) -> &SpdeError {
        match self {
            SpdeError::StepFailed { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self.root_cause(), SpdeError::Overflow { .. })
    }
}

pub type Result<T> = std::result::Result<T, SpdeError>;
