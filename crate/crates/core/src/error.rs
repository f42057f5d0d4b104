use thiserror::Error;

/// Errors raised by the workbench. Numerical rejections carry the offending
/// quantity so callers can report it.
#[derive(Debug, Error)]
pub enum QbcError {
    #[error("operator has dimension 0")]
    EmptyDimension,

    #[error("not Hermitian: |a[{row}][{col}] - conj(a[{col}][{row}])| = {deviation:.3e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("matrix is not unitary: max |u u^H - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:.3e}, f(hi) = {f_hi:.3e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("wrong grid kind: expected {expected}, found {found}")]
    WrongGridKind { expected: &'static str, found: &'static str },

    #[error("operator is not projectable: max |[H, P]| = {commutator:.3e}")]
    NotProjectable { commutator: f64 },

    #[error("state is not in the {sector} sector: asymmetry norm {asymmetry:.3e}")]
    WrongSector { sector: &'static str, asymmetry: f64 },

    #[error("state is not normalized: norm = {norm:.12}")]
    NotNormalized { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root bracket failure for branch {branch}: {reason}")]
    BracketFailure { branch: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QbcError>;
