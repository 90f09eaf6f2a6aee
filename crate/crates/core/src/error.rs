use std::path::PathBuf;

use crate::data::TermId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty or has fewer than two samples")]
    EmptyData,
    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(usize),
    #[error("response vector is constant")]
    ConstantResponse,
    #[error("index {index} out of range (p = {p})")]
    IndexOutOfRange { index: usize, p: usize },
    #[error("covariate matrix is rank deficient after adding an intercept")]
    RankDeficientCovariates,
    #[error("unknown identifier `{0}`")]
    UnknownId(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("pair ({0}, {1}) is excluded by the weight matrix")]
    ExcludedPair(usize, usize),
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),
    #[error("coordinate descent did not converge within {cycles} cycles")]
    NotConverged { cycles: usize },
    #[error("no interaction pair is allowed by the weight matrix")]
    NoAllowedPairs,
    #[error(
        "target of {target} main effects unreachable: closest count {closest} \
         (bracket [{lambda_lo:.6e}, {lambda_hi:.6e}])"
    )]
    TargetUnreachable { target: usize, closest: usize, lambda_lo: f64, lambda_hi: f64 },
    #[error("design of selected terms is rank deficient; collinear terms: {0:?}")]
    RankDeficient(Vec<TermId>),
    #[error("{terms} terms cannot be refit on {n} samples")]
    TooManyTerms { terms: usize, n: usize },
    #[error("standard errors must be positive")]
    NonPositiveSE,
    #[error("power must lie strictly between 0 and 1, got {0}")]
    InvalidPower(f64),
    #[error("model needs {needed} SNPs but only {p} are simulated")]
    ModelTooLarge { needed: usize, p: usize },
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("sample mismatch: {0}")]
    SampleMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code used in CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyData => "EmptyData",
            Error::ConstantColumn(_) => "ConstantColumn",
            Error::ConstantResponse => "ConstantResponse",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::RankDeficientCovariates => "RankDeficientCovariates",
            Error::UnknownId(_) => "UnknownId",
            Error::DuplicateId(_) => "DuplicateId",
            Error::ExcludedPair(..) => "ExcludedPair",
            Error::NonFiniteInput(_) => "NonFiniteInput",
            Error::NotConverged { .. } => "NotConverged",
            Error::NoAllowedPairs => "NoAllowedPairs",
            Error::TargetUnreachable { .. } => "TargetUnreachable",
            Error::RankDeficient(_) => "RankDeficient",
            Error::TooManyTerms { .. } => "TooManyTerms",
            Error::NonPositiveSE => "NonPositiveSE",
            Error::InvalidPower(_) => "InvalidPower",
            Error::ModelTooLarge { .. } => "ModelTooLarge",
            Error::Config { .. } => "Config",
            Error::Parse { .. } => "Parse",
            Error::SampleMismatch(_) => "SampleMismatch",
            Error::Invalid(_) => "Invalid",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}
