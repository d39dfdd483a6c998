//! Error type shared across the crate.
//!
//! The variants are grouped by how callers should react: `Validation`,
//! `Parse` and `OutOfRange` mean the input is malformed, `Infeasible*`
//! means the input is well formed but no feasible plan exists, and `Io`
//! wraps filesystem trouble. Command-line frontends map these groups to
//! distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition or type invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file could be read but not understood. `line` is 1-based and
    /// counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A purchase quantity falls outside the fleet's feasible range
    /// `[0, total_capacity]`.
    #[error("purchase {value} outside feasible range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    /// A single storage transition would require an out-of-range purchase.
    /// Solvers treat this as an infinite-cost arc rather than a failure.
    #[error("infeasible transition: purchase {purchase} outside [0, {max}]")]
    InfeasibleTransition { purchase: f64, max: f64 },

    /// No feasible state path exists. `stage` is the first 1-based decision
    /// stage at which every grid state became unreachable.
    #[error("no feasible schedule: every storage state is unreachable at stage {stage}")]
    Infeasible { stage: usize },

    /// Day-level variant of `Infeasible` used by the reporting layer.
    /// `day` is 0-based.
    #[error("day {day} has no feasible schedule (first dead stage {stage})")]
    InfeasibleDay { day: usize, stage: usize },

    /// An oracle was asked for more work than it is willing to verify.
    #[error("oracle budget exceeded: {detail}")]
    BudgetExceeded { detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// True for the variants that signal "no feasible plan" rather than
    /// "bad input". Frontends use this to pick an exit code.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. }
                | Error::InfeasibleDay { .. }
                | Error::InfeasibleTransition { .. }
        )
    }
}
