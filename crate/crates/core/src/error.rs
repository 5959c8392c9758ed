use thiserror::Error;

use crate::optimize::OptimizationResult;

pub type Result<T> = std::result::Result<T, DiscordError>;

#[derive(Debug, Error)]
pub enum DiscordError {
    #[error("matrix shape {rows}x{cols} does not match expected side {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("eigenvalue {eigenvalue:e} is below the positivity tolerance")]
    NotPositive { eigenvalue: f64 },

    #[error("invalid layout: {0}")]
    BadLayout(String),

    #[error("label `{0}` appears in both operands")]
    LabelCollision(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("state has {0} subsystems, a bipartite state is required")]
    NotBipartite(usize),

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("basis is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("expected {expected} basis parameters, got {got}")]
    BadParamCount { expected: usize, got: usize },

    #[error("optimizer: no start met the convergence tolerance (best {:.12})", best.minimum)]
    NoConvergence { best: Box<OptimizationResult> },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("branch probabilities sum to {0}, expected 1")]
    BadProbabilities(f64),

    #[error("branch basis states are not orthonormal")]
    NonOrthogonalBranches,

    #[error("nested spec: {0}")]
    BadNestedSpec(String),

    #[error("c-not control and target are both `{0}`")]
    SelfControl(String),

    #[error("amplitudes have squared norm {0}, expected 1")]
    NotNormalized(f64),

    #[error("side `{0}` appears more than once in the protocol order")]
    DuplicateSide(String),

    #[error("protocol never reached the joint entropy (residual excess {excess:e} bits)")]
    NotExhausted { excess: f64 },

    #[error("bad sweep range: {0}")]
    BadRange(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
