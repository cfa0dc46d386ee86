use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid factor set: {0}")]
    FactorSet(String),

    #[error("{kind} did not converge for matrix {fingerprint}")]
    Decomposition {
        kind: &'static str,
        fingerprint: String,
    },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not normal (residual {residual:.3e})")]
    NotNormal { residual: f64 },

    #[error("invalid tolerance: {0}")]
    Tolerance(String),

    #[error("invalid random spec: {0}")]
    RandomSpec(String),

    #[error("invalid norm spec: {0}")]
    NormSpec(String),

    #[error("trace must vanish, got {trace}")]
    NonzeroTrace { trace: String },

    #[error("traces differ: {left} vs {right}")]
    TraceMismatch { left: String, right: String },

    #[error("unitary dilation needs an even ancilla dimension >= {required}, got {given}")]
    AncillaTooSmall { required: usize, given: usize },

    #[error("trace {trace} is not a positive integer (nearest integer {nearest})")]
    NonIntegerTrace { trace: String, nearest: i64 },

    #[error("rank {rank} exceeds the ancilla dimension {ancilla}")]
    RankTooLarge { rank: usize, ancilla: usize },

    #[error("rank must equal {expected}, got {actual}")]
    RankMismatch { expected: usize, actual: usize },

    #[error("not Flanders-similar: {0}")]
    NotFlandersSimilar(String),

    #[error("no admissible construction: {0}")]
    Construction(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed JSON: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}
