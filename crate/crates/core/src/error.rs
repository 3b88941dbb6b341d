use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands belong to different fields")]
    ContextMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("insufficient precision: need O(u^{needed}), have O(u^{available})")]
    InsufficientPrecision { needed: i64, available: i64 },
    #[error("matrix is singular")]
    Singular,
    #[error("not a lattice: {0}")]
    NotALattice(String),
    #[error("unsupported field: p={p}, k={k}")]
    UnsupportedField { p: u32, k: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported normal form: {0}")]
    UnsupportedNormalForm(String),
    #[error("unrecognized shape: {0}")]
    UnrecognizedShape(String),
    #[error("matrix is not upper triangular with monomial diagonal")]
    NotTriangular,
    #[error("no admissible lattice exists")]
    NoAdmissibleLattice,
    #[error("enumeration budget of {limit} lattices exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("enumeration incomplete: admissible lattice on the boundary shell at distance {distance}")]
    EnumerationIncomplete { distance: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
