use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: usize },

    #[error("numeric overflow at iteration {iteration}")]
    NumericOverflow { iteration: usize },

    #[error("invalid mode (m = {m}, l = {l}): require l >= m >= 0")]
    InvalidMode { m: i64, l: i64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite size parameter")]
    NonFiniteParameter,
}

pub type Result<T> = std::result::Result<T, Error>;
