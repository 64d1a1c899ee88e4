//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad matrix shape, negative weight, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Cost evaluation was asked for an empty center set.
    #[error("no centers")]
    NoCenters,

    /// Full guess enumeration would exceed the configured budget.
    #[error("guess budget exceeded — use planted mode ({count} guesses > budget {budget})")]
    GuessBudgetExceeded { count: u128, budget: u128 },

    /// Subset enumeration in the brute-force oracle would exceed the budget.
    #[error("oracle budget exceeded ({count} subsets > budget {budget})")]
    OracleBudgetExceeded { count: u128, budget: u128 },

    /// The LP for this (leaders, radii) guess admits no feasible assignment.
    #[error("infeasible guess")]
    InfeasibleGuess,

    /// Incidence reduction on a disconnected hypergraph without the repair flag.
    #[error("instance disconnected; enable complete_triples or connect input")]
    Disconnected,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A condition the analysis guarantees can not happen did happen.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 input, 3 budget, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::NoCenters
            | Error::Io(_)
            | Error::Json(_)
            | Error::Disconnected
            | Error::InfeasibleGuess => 2,
            Error::GuessBudgetExceeded { .. } | Error::OracleBudgetExceeded { .. } => 3,
            Error::Internal(_) => 4,
        }
    }
}
