use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label out of range: {0}")]
    LabelOutOfRange(String),

    /// The truncated Fock space is too small for the requested state.
    #[error("truncation insufficient in {sector}: {detail}")]
    TruncationInsufficient { sector: String, detail: String },

    #[error("operator is not Hermitian (max |A - A^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("integrator step {step} too large: h * omega_max = {product} exceeds {limit}")]
    StepTooLarge { step: f64, product: f64, limit: f64 },

    #[error("projection probability {0:e} is below the resolvable threshold")]
    ZeroProbability(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn truncation(sector: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::TruncationInsufficient {
            sector: sector.into(),
            detail: detail.into(),
        }
    }
}
