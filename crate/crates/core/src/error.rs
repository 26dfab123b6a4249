use thiserror::Error;

/// Errors raised across the twin.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside its permitted range (DAC code, voltage, limits).
    #[error("out of range: {0}")]
    Range(String),
    /// A mathematical precondition does not hold (non-positive frequency,
    /// too-short trace, degenerate operating point).
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested analysis does not apply to the input.
    #[error("not applicable: {0}")]
    NotApplicable(String),
    /// No solution exists inside the search region.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A curve fit did not produce an identifiable result.
    #[error("fit failed: {0}")]
    FitFailure(String),
    /// A configuration value violates a model invariant.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Persisted snapshot could not be decoded or has the wrong version.
    #[error("schema error: {0}")]
    Schema(String),
    /// The instrument answered with an `ERR` reply or broke the framing.
    #[error("instrument error: {0}")]
    Instrument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
