use thiserror::Error;

/// Errors raised anywhere in the numerical core.
///
/// Variant names are part of the public contract: the CLI reports them
/// verbatim in its machine-readable error output.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("FellerViolation: {0}")]
    FellerViolation(String),
    #[error("NonSPDGamma: {0}")]
    NonSpdGamma(String),
    #[error("SingularSigma: {0}")]
    SingularSigma(String),
    #[error("LeverageOutOfRange: {0}")]
    LeverageOutOfRange(String),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("DomainError: {0}")]
    DomainError(String),
    #[error("InvalidPayoff: {0}")]
    InvalidPayoff(String),

    #[error("StabilizationUnavailable: {0}")]
    StabilizationUnavailable(String),
    #[error("InconclusiveDiagnostic: {0}")]
    InconclusiveDiagnostic(String),

    #[error("ImaginaryAxisEigenvalue: {0}")]
    ImaginaryAxisEigenvalue(String),
    #[error("SingularP11: {0}")]
    SingularP11(String),
    #[error("StepTooLarge: {0}")]
    StepTooLarge(String),
    #[error("SingularMatrix: {0}")]
    SingularMatrix(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("SchemeModelMismatch: {0}")]
    SchemeModelMismatch(String),
    #[error("NumericalBlowup: non-finite state at step {step} on path {path}")]
    NumericalBlowup { step: usize, path: usize },
    #[error("UnsupportedModel: {0}")]
    UnsupportedModel(String),
    #[error("NonInvertibleTransform: {0}")]
    NonInvertibleTransform(String),

    #[error("NotInCatalog: {0}")]
    NotInCatalog(String),
    #[error("GuardViolated: {0}")]
    GuardViolated(String),
    #[error("TailDivergence: {0}")]
    TailDivergence(String),
    #[error("NonPositivePath: {0}")]
    NonPositivePath(String),

    #[error("MissingScoreFunction: {0}")]
    MissingScoreFunction(String),
    #[error("SingularDiffusion: {0}")]
    SingularDiffusion(String),
}

impl Error {
    /// The bare variant name, e.g. `"FellerViolation"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::FellerViolation(_) => "FellerViolation",
            Error::NonSpdGamma(_) => "NonSPDGamma",
            Error::SingularSigma(_) => "SingularSigma",
            Error::LeverageOutOfRange(_) => "LeverageOutOfRange",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DomainError(_) => "DomainError",
            Error::InvalidPayoff(_) => "InvalidPayoff",
            Error::StabilizationUnavailable(_) => "StabilizationUnavailable",
            Error::InconclusiveDiagnostic(_) => "InconclusiveDiagnostic",
            Error::ImaginaryAxisEigenvalue(_) => "ImaginaryAxisEigenvalue",
            Error::SingularP11(_) => "SingularP11",
            Error::StepTooLarge(_) => "StepTooLarge",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::NoConvergence(_) => "NoConvergence",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SchemeModelMismatch(_) => "SchemeModelMismatch",
            Error::NumericalBlowup { .. } => "NumericalBlowup",
            Error::UnsupportedModel(_) => "UnsupportedModel",
            Error::NonInvertibleTransform(_) => "NonInvertibleTransform",
            Error::NotInCatalog(_) => "NotInCatalog",
            Error::GuardViolated(_) => "GuardViolated",
            Error::TailDivergence(_) => "TailDivergence",
            Error::NonPositivePath(_) => "NonPositivePath",
            Error::MissingScoreFunction(_) => "MissingScoreFunction",
            Error::SingularDiffusion(_) => "SingularDiffusion",
        }
    }

    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::FellerViolation(_)
                | Error::NonSpdGamma(_)
                | Error::SingularSigma(_)
                | Error::LeverageOutOfRange(_)
                | Error::InvalidParameter(_)
                | Error::DomainError(_)
                | Error::InvalidPayoff(_)
                | Error::SchemeModelMismatch(_)
                | Error::NotInCatalog(_)
                | Error::GuardViolated(_)
                | Error::MissingScoreFunction(_)
                | Error::DimensionMismatch(_)
                | Error::UnsupportedModel(_)
                | Error::StabilizationUnavailable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
