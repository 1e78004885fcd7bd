use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("entry ({row}, {col}) out of declared bounds {n_rows}x{n_cols}")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("duplicate coordinate ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("entry regime violated: {0}")]
    Regime(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("dense capacity exceeded: n = {n} is over the guard {guard}")]
    Capacity { n: usize, guard: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
