use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("data length mismatch: expected {expected}, got {got}")]
    InvalidData { expected: usize, got: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("SVD did not converge within {sweeps} Jacobi sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("matrix is rank deficient: |R[{column},{column}]| = {value:e}")]
    RankDeficient { column: usize, value: f64 },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("singular value {k} is not separated from the rest of the spectrum (gap {gap:e})")]
    GapTooSmall { k: usize, gap: f64 },

    #[error("triplet index {k} out of range 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("invalid dimensions n = {n}, p = {p}: {reason}")]
    InvalidDims {
        n: usize,
        p: usize,
        reason: &'static str,
    },

    #[error("zero vector")]
    ZeroVector,

    #[error("perturbed triplet cannot be matched (best overlap {overlap:.3})")]
    TripletMatchAmbiguous { overlap: f64 },

    #[error("only {survived} samples of series {series} are above the noise floor")]
    InsufficientSamples {
        series: &'static str,
        survived: usize,
    },

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("perturbation direction must have unit Frobenius norm, got {norm}")]
    DirectionNotNormalized { norm: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
