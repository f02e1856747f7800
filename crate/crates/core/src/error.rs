use thiserror::Error;

/// Errors raised by the toolkit. The `Display` form is prefixed with the
/// originating module so command-line callers can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symmat: matrix contains non-finite entries")]
    NonFinite,
    #[error("symmat: matrix is not positive semi-definite (eigenvalue {min_eigenvalue:e} below -{threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },
    #[error("symmat: matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{context}: index {index} out of range for length {len}")]
    Index {
        context: &'static str,
        index: usize,
        len: usize,
    },
    #[error("symmat: duplicate index {0} in index set")]
    DuplicateIndex(usize),
    #[error("{context}: dimension mismatch (expected {expected}, found {found})")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("symmat: empty matrix")]
    Empty,
    #[error("symmat: eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("search: subset size {k} is not valid for {p} variables")]
    KTooLarge { k: usize, p: usize },
    #[error("search: {count} subsets exceed the enumeration cap of {cap}")]
    TooManySubsets { count: u128, cap: u128 },
    #[error("search: invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("covest: data matrix has missing entries")]
    HasMissing,
    #[error("covest: variables {0} and {1} have no jointly observed samples")]
    InsufficientOverlap(usize, usize),
    #[error("covest: variable {column} has {observed} observed samples, at least 2 are required")]
    TooFewObserved { column: usize, observed: usize },
    #[error("covest: variable {0} has zero variance")]
    ZeroVariance(usize),
    #[error("sizesel: non-positive chi-squared degrees of freedom (n={n}, p={p}, k={k})")]
    DegreesOfFreedom { n: usize, p: usize, k: usize },
    #[error("sizesel: invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sizesel: every subset size up to p-1 was rejected")]
    NoFeasibleK,
    #[error("io: {0}")]
    Parse(String),
}

impl Error {
    /// Name of the module the error originated in.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Index { context, .. } | Error::DimMismatch { context, .. } => context,
            Error::NonFinite
            | Error::NotPsd { .. }
            | Error::NotSymmetric { .. }
            | Error::DuplicateIndex(_)
            | Error::Empty
            | Error::NoConvergence => "symmat",
            Error::KTooLarge { .. } | Error::TooManySubsets { .. } | Error::InvalidConfig(_) => "search",
            Error::HasMissing
            | Error::InsufficientOverlap(..)
            | Error::TooFewObserved { .. }
            | Error::ZeroVariance(_) => "covest",
            Error::DegreesOfFreedom { .. } | Error::InvalidArgument(_) | Error::NoFeasibleK => "sizesel",
            Error::Parse(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
