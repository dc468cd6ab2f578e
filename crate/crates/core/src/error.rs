use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not diagonalizable to tolerance (residual {residual:.3e})")]
    DefectiveMatrix { residual: f64 },
    #[error("similarity factor is singular or inconsistent (residual {residual:.3e})")]
    SingularFactor { residual: f64 },
    #[error("invalid occupation cap {cap} for {sites} sites")]
    InvalidCap { sites: usize, cap: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trace of the evolved state vanished ({trace:.3e})")]
    VanishingNorm { trace: f64 },
    #[error("degenerate block of the coupling is itself defective (residual {residual:.3e})")]
    DegenerateCoupling { residual: f64 },
    #[error("left/right overlap too small to normalize ({overlap:.3e})")]
    SingularNormalization { overlap: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("square-root branch is ambiguous (argument {re:.3e}{im:+.3e}i)")]
    BranchAmbiguity { re: f64, im: f64 },
    #[error("dissipation rate must be positive")]
    VanishingDissipation,
}

impl Error {
    /// Stable identifier used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::DefectiveMatrix { .. } => "DefectiveMatrix",
            Error::SingularFactor { .. } => "SingularFactor",
            Error::InvalidCap { .. } => "InvalidCap",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InvalidState(_) => "InvalidState",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::VanishingNorm { .. } => "VanishingNorm",
            Error::DegenerateCoupling { .. } => "DegenerateCoupling",
            Error::SingularNormalization { .. } => "SingularNormalization",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::BranchAmbiguity { .. } => "BranchAmbiguity",
            Error::VanishingDissipation => "VanishingDissipation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
