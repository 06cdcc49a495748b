use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("variable count mismatch: expected {expected}, found {found}")]
    VariableCount { expected: usize, found: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("polynomial is not symmetric")]
    PolynomialNotSymmetric,

    #[error("p(0) is singular")]
    SingularAtZero,

    #[error("no signature change along the ray up to t = {t_max}")]
    RayNeverExits { t_max: f64 },

    #[error("pair is not on the boundary (residual {residual:e}, allowed {allowed:e})")]
    NotOnBoundary { residual: f64, allowed: f64 },

    #[error("compressed pair fails the residual check (residual {residual:e})")]
    CompressionResidual { residual: f64 },

    #[error("p(0) is not the identity; half-degree compression needs p(0) = I")]
    NotIdentityAtZero,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix norm {0} exceeds 1")]
    NotContraction(f64),

    #[error("separation failed: {0}")]
    SeparationFailed(String),

    #[error("trace state not found: {0}")]
    StateNotFound(String),

    #[error("quadratic form has negative eigenvalue {eigenvalue:e}; D_p(1) is unbounded along {direction:?}")]
    NotPsd { eigenvalue: f64, direction: Vec<f64> },

    #[error("degree {0} exceeds 2")]
    DegreeTooHigh(i64),

    #[error("constant term must be exactly 1 for a scalar quadratic")]
    NotMonicConstant,

    #[error("synthesis made no progress at iteration {iteration}: vanishing dimension {before} -> {after}")]
    SynthesisStalled {
        iteration: usize,
        before: usize,
        after: usize,
    },

    #[error("iteration cap of {} exceeded with {} survivors", .0.iterations, .0.survivors)]
    IterationCapExceeded(Box<crate::synth::SynthesisReport>),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
