use thiserror::Error;

/// Errors raised by the library. Verdicts such as `not_found` or `violated`
/// are ordinary results, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not hermitian: {0}")]
    NotHermitian(String),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation degree {d} too small (need at least {need})")]
    DegreeTooSmall { d: usize, need: usize },

    #[error("module `{0}` has no archimedean bound; pass an override to query norms")]
    NotArchimedean(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("no feasible point: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
