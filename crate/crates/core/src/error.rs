use thiserror::Error;

/// Domain errors shared by every layer of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eigenvalue iteration did not converge within {0} iterations")]
    EigenFailure(usize),

    #[error("element is not positive")]
    NotPositive,

    #[error("element is singular{}", .index.as_ref().map(|i| format!(" at index {i}")).unwrap_or_default())]
    Singular { index: Option<String> },

    #[error("result is not representable by a constant tail rule")]
    UnsupportedTail,

    #[error("operands belong to different modules or algebras")]
    ModuleMismatch,

    #[error("unknown index `{0}`")]
    UnknownIndex(String),

    #[error("ideal has an empty kernel index set")]
    EmptyKernel,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Stable name used in machine-readable output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EigenFailure(_) => "EigenFailure",
            Error::NotPositive => "NotPositive",
            Error::Singular { .. } => "Singular",
            Error::UnsupportedTail => "UnsupportedTail",
            Error::ModuleMismatch => "ModuleMismatch",
            Error::UnknownIndex(_) => "UnknownIndex",
            Error::EmptyKernel => "EmptyKernel",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Invalid(_) => "Invalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
