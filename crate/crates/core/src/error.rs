use thiserror::Error;

/// Errors raised across the library.
///
/// Variants fall in two groups: caller mistakes (bad input, out-of-range
/// parameters, violated preconditions) and internal invariant failures
/// (`InternalInconsistency`, `Numerical`), which signal a bug or a
/// conditioning problem rather than bad input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: a distribution needs at least one atom")]
    EmptyInput,

    #[error("negative weight {0}")]
    NegativeWeight(f64),

    #[error("weights sum to zero")]
    ZeroTotalWeight,

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("malformed linear program: {0}")]
    Malformed(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("mismatched solver state: {0}")]
    MismatchedState(String),

    #[error("master problem infeasible: the feasible set is empty")]
    MasterInfeasible,

    #[error("dominance-constrained problem is infeasible (min distance {min_distance:e})")]
    Infeasible { min_distance: f64 },

    #[error("invalid generator settings: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::OutOfRange {
            name,
            value,
            expected,
        }
    }

    /// True for errors that indicate an internal bug or a numerical breakdown
    /// rather than invalid input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::InternalInconsistency(_) | Error::Numerical(_) | Error::MismatchedState(_)
        )
    }
}
