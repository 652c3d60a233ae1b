use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Entity identifier unknown to the graph.
    EntityNotFound(String),
    /// Caller passed arguments that violate an operation's precondition.
    InvalidInput(String),
    /// A chain query exceeded its row or expansion budget.
    BudgetExceeded { rows: usize, steps: usize },
    /// No candidate chain is available for selection.
    EmptyCandidates,
    /// Training or model configuration is inconsistent.
    Config(String),
    /// A textual chain or path could not be parsed.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EntityNotFound(id) => write!(f, "entity not found: {id}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::BudgetExceeded { rows, steps } => {
                write!(f, "query budget exceeded after {rows} rows / {steps} expansions")
            }
            Error::EmptyCandidates => f.write_str("no candidate chain to select from"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
