use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("coherence block exhausted: {used} of {coherence_tc} uses consumed")]
    BlockExhausted { used: usize, coherence_tc: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("zero estimate: beamforming direction undefined")]
    ZeroEstimate,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
