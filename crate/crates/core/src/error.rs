use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No point satisfies the constraints; `residual` is the smallest achievable
    /// worst-case constraint violation found by the feasibility phase.
    #[error("problem infeasible (phase-I residual {residual:.3e})")]
    Infeasible { residual: f64 },

    /// The barrier iteration could not make progress. `last_iterate` holds the
    /// best point reached, when one exists.
    #[error("numerical failure: {reason}")]
    NumericalFailure {
        reason: String,
        last_iterate: Option<Vec<f64>>,
    },

    #[error("spectral factorization failed: {reason} (root cluster {cluster:?})")]
    FactorizationFailure { reason: String, cluster: Vec<(f64, f64)> },

    /// A subproblem failed in the middle of an SCA loop; the trace of accepted
    /// objective values up to the failure is attached.
    #[error("{stage} failed after {} iterations: {source}", history.len())]
    Subproblem {
        stage: &'static str,
        history: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn numerical(reason: impl Into<String>) -> Self {
        Error::NumericalFailure {
            reason: reason.into(),
            last_iterate: None,
        }
    }

    /// True for errors caused by bad user input rather than solver trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidScenario(_) | Error::InvalidInput(_) | Error::UnknownScheme(_)
        )
    }

    pub(crate) fn in_stage(self, stage: &'static str, history: Vec<f64>) -> Self {
        Error::Subproblem {
            stage,
            history,
            source: Box::new(self),
        }
    }

    /// Strips `Subproblem` wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Subproblem { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
