use thiserror::Error;

/// Errors raised by model construction, transformations and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model error: {0}")]
    Model(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{context}: column {column}: {message}")]
    Predicate {
        context: String,
        column: usize,
        message: String,
    },

    #[error("model has {} diagnostic(s):\n{}", .0.len(), .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<crate::model::Diagnostic>),

    #[error("variable `{variable}` is not solvable:\n{}", .reasons.iter().map(|r| format!("  {r}")).collect::<Vec<_>>().join("\n"))]
    Unsolvable {
        variable: String,
        reasons: Vec<String>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unbounded derivative: flow {flow} over {range} has no finite bound")]
    UnboundedDerivative { flow: String, range: String },

    #[error("cover of mode `{mode}` does not cover its invariant; uncovered box {witness}")]
    Uncovered { mode: String, witness: String },

    #[error("cover of mode `{mode}`: {message}")]
    Cover { mode: String, message: String },

    #[error("witness error: {0}")]
    Witness(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
