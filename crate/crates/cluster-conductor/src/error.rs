use thiserror::Error;

/// Every failure the library can report. Variants carry enough context for
/// the CLI to emit a machine-readable error object.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(String),
    #[error("valuation argument must be finite and nonzero")]
    DegenerateValuation,
    #[error("malformed extended rational {0:?}")]
    ParseExtRat(String),
    #[error("cyclotomic elements over different r ({0} vs {1})")]
    MismatchedCyclotomic(u32, u32),
    #[error("exponent {0} is divisible by r = {1}")]
    NotCoprime(i64, u32),
    #[error("polynomial precondition failed: {0}")]
    Polynomial(String),
    #[error("matrix is not symmetric at ({0}, {1})")]
    NonSymmetric(usize, usize),
    #[error("matrix has a bad diagonal or infinite off-diagonal entry at ({0}, {1})")]
    BadMatrixEntry(usize, usize),
    #[error("ultrametric inequality fails for roots ({0}, {1}, {2})")]
    Ultrametric(usize, usize, usize),
    #[error("cluster picture: {0}")]
    Picture(String),
    #[error("inertia action: {0}")]
    Inertia(String),
    #[error("conductor: {0}")]
    Conductor(String),
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("depth positivity fails: {0}")]
    DepthGuard(String),
    #[error("case not covered: {0}")]
    Unsupported(String),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("precision exhausted at {0} digits")]
    PrecisionExhausted(u32),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable short name used in JSON error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotOddPrime(_) => "not_odd_prime",
            Error::DegenerateValuation => "degenerate_valuation",
            Error::ParseExtRat(_) => "parse",
            Error::MismatchedCyclotomic(..) => "mismatched_r",
            Error::NotCoprime(..) => "not_coprime",
            Error::Polynomial(_) => "polynomial",
            Error::NonSymmetric(..) => "non_symmetric",
            Error::BadMatrixEntry(..) => "bad_matrix_entry",
            Error::Ultrametric(..) => "ultrametric",
            Error::Picture(_) => "picture",
            Error::Inertia(_) => "inertia",
            Error::Conductor(_) => "conductor",
            Error::InvalidParams(_) => "invalid_params",
            Error::DepthGuard(_) => "depth_guard",
            Error::Unsupported(_) => "unsupported",
            Error::Oracle(_) => "oracle",
            Error::PrecisionExhausted(_) => "precision_exhausted",
        }
    }
}
