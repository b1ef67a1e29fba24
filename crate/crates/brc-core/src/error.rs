use thiserror::Error;

/// Errors raised by the analysis kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The inputs are structurally valid but describe a degenerate problem
    /// (e.g. zero sampling mass, a rule with no effective condition).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The system function contradicted itself on a concrete vector, so it
    /// cannot be coherent.
    #[error("coherency violation at component vector {witness:?}: {detail}")]
    Coherency { witness: Vec<u8>, detail: String },

    #[error("system function failed: {0}")]
    SystemFunction(String),

    /// An archived sample has zero probability under the sampling
    /// distribution but positive probability under the target, so its
    /// importance weight is unbounded.
    #[error("unbounded importance weight for sample {index} ({sample:?})")]
    UnboundedWeight { index: usize, sample: Vec<u8> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
