use thiserror::Error;

/// Errors raised by the algebraic layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("step budget of {budget} exceeded while {during}")]
    BudgetExceeded { budget: usize, during: String },

    #[error("no truncation bound configured for an infinite-dimensional owner `{owner}`")]
    MissingBound { owner: String },

    #[error("incompatible owners: `{left}` vs `{right}`")]
    IncompatibleOwner { left: String, right: String },

    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),

    #[error("not a complex: {0}")]
    NotAComplex(String),

    #[error("not a chain map: {0}")]
    NotAChainMap(String),

    #[error("not a map of graded mixed algebras: {0}")]
    NotAMap(String),

    #[error("ambiguous input: {0}")]
    AmbiguousInput(String),

    #[error("relations do not form a regular sequence: {0}")]
    NotRegular(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
