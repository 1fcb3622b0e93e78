use thiserror::Error;

/// Exit code when every check passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code when at least one check failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for malformed input or a construction error.
pub const EXIT_INPUT: i32 = 2;
/// Exit code when a rewrite or reduction budget ran out.
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("error[syntax] {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("error[unknown-name] {line}:{col}: unknown {what} `{name}`")]
    UnknownName { line: usize, col: usize, what: String, name: String },

    #[error("error[duplicate] `{name}` declared at line {first} and again at line {second}")]
    Duplicate { name: String, first: usize, second: usize },

    #[error("error[type] {line}:{col}: {msg}")]
    Type { line: usize, col: usize, msg: String },

    #[error("error[build] {line}:{col}: {source}")]
    Build {
        line: usize,
        col: usize,
        #[source]
        source: folwerk_core::Error,
    },

    #[error("error[check] check #{index} `{name}`: {source}")]
    Check {
        index: usize,
        name: String,
        #[source]
        source: folwerk_core::Error,
    },

    #[error("error[io] {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check { source: folwerk_core::Error::BudgetExceeded { .. }, .. }
            | CliError::Build { source: folwerk_core::Error::BudgetExceeded { .. }, .. } => EXIT_BUDGET,
            _ => EXIT_INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
