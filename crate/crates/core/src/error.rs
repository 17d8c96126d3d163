use thiserror::Error;

/// Errors raised by the model, simulation and inference routines.
#[derive(Debug, Error)]
pub enum MivtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("trawl set has infinite Lebesgue measure: {0}")]
    InfiniteMeasure(String),

    #[error("numerical failure: {message} (achieved error estimate {achieved:e})")]
    Numeric { message: String, achieved: f64 },

    #[error("overflow/underflow: {0}")]
    Range(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("fit failed: {message} (best residual {best_residual:e})")]
    FitFailure { message: String, best_residual: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<MivtError>,
    },

    #[error("bootstrap unstable: {failures} of {reps} replicate fits failed")]
    BootstrapUnstable { failures: usize, reps: usize },

    #[error("data format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MivtError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MivtError::InvalidParameter(msg.into())
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        MivtError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, MivtError>;
