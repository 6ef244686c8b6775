use thiserror::Error;

/// Errors produced by the solvers and set operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("problem is infeasible")]
    Infeasible,

    #[error("problem is unbounded")]
    Unbounded,

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("projection aborted: intermediate row count {rows} exceeds cap {cap}")]
    ExplosionAbort { rows: usize, cap: usize },

    #[error("system is not controllable (rank {rank} < {n})")]
    NotControllable { rank: usize, n: usize },

    #[error("state matrix is not nilpotent within {0} steps")]
    NotNilpotent(usize),

    #[error("invalid lasso specification: {0}")]
    InvalidLasso(String),

    #[error("vertex enumeration too large: {0} vertices")]
    VertexEnumerationTooLarge(usize),

    #[error("implicit invariant set is empty")]
    EmptyImplicit,

    #[error("safe set at t={0} does not contain the previous safe set")]
    SafeSetShrank(u64),

    #[error("supervision problem infeasible at the initial step")]
    InitiallyInfeasible,

    #[error("recursive feasibility lost at t={0}")]
    RecursiveFeasibilityLost(u64),

    #[error("oracle disagreement: {0}")]
    OracleDisagreement(String),

    #[error("polytope is unbounded")]
    UnboundedSet,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
