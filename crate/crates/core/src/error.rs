use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("cannot parse rational {text:?}: {reason}")]
    ParseRational { text: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid event tree: {0}")]
    InvalidTree(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("market has {outcomes} outcomes, above the face-enumeration limit of {max}")]
    LimitExceeded { outcomes: usize, max: usize },

    #[error("market is not arbitrage-free")]
    NotViable,

    #[error("internal contract violated: {0}")]
    ContractViolation(String),

    #[error("no admissible perturbation found after {attempts} attempts")]
    RetryLimit { attempts: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
