use alloc::string::String;
use thiserror::Error;

/// Errors from the dense Hermitian linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix data length {len} does not match dimension {dim} (expected {})", dim * dim)]
    BadShape { dim: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not Hermitian: max |M - M^H| = {max_asym:e} exceeds {tol:e}")]
    NotHermitian { max_asym: f64, tol: f64 },
    #[error("matrix is not positive definite: min eigenvalue {min_eig:e} below tolerance {tol:e}")]
    NotPositiveDefinite { min_eig: f64, tol: f64 },
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("empty matrix (dimension 0)")]
    Empty,
}

/// Errors from the normalized-sample-covariance expectation kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnscmError {
    #[error("eigenvalue {index} is not strictly positive: {value:e}")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error(
        "eigenvalues {i} and {j} are numerically degenerate (ratio within {gap:e} of 1); \
         respace the spectrum before evaluating the closed form"
    )]
    DegenerateEigenvalues { i: usize, j: usize, gap: f64 },
    #[error("empty spectrum")]
    EmptySpectrum,
    #[error("invalid spacing parameter {eps:e}; must be finite and non-negative")]
    InvalidSpacing { eps: f64 },
    #[error("{given} Monte-Carlo samples is below the minimum of {min}")]
    TooFewSamples { given: usize, min: usize },
    #[error("closed form is only defined over the complex-circular field; use the Monte-Carlo method for real data")]
    ClosedFormRealField,
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Errors from the regularized estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sample batch dimension {batch} does not match prior dimension {prior}")]
    DimensionMismatch { prior: usize, batch: usize },
    #[error("sample vector {index} is identically zero")]
    ZeroSample { index: usize },
    #[error("sample row {index} has length {actual}, expected {expected}")]
    RaggedBatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("update matrix lost positive definiteness at iteration {iteration} (min weight {min_weight:e})")]
    IndefiniteUpdate { iteration: usize, min_weight: f64 },
    #[error("initialization matrix is not positive definite")]
    IndefiniteInit,
    #[error(transparent)]
    Anscm(#[from] AnscmError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Errors from the detection-simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{trials} trials cannot resolve a false-alarm rate of {pfa:e}; need at least {min}")]
    TooFewTrials { trials: usize, pfa: f64, min: usize },
    #[error("estimator failed at stream step {step}: {source}")]
    StreamStep {
        step: usize,
        #[source]
        source: EstimError,
    },
    #[error(transparent)]
    Estim(#[from] EstimError),
    #[error(transparent)]
    Mat(#[from] MatError),
}
