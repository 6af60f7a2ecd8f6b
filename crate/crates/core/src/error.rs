use thiserror::Error;

/// Errors raised while building chains, walks, circuits and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("entry ({row}, {col}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("chain is not ergodic (irreducible: {irreducible}, aperiodic: {aperiodic}); stationary distribution is not unique")]
    NotErgodic { irreducible: bool, aperiodic: bool },

    #[error("chain is not reversible: {0}")]
    NotReversible(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("projectors {0} and {1} are not orthogonal")]
    NonOrthogonalProjectors(usize, usize),

    #[error("ancilla register is not in the all-zeros state (residual norm {0:e})")]
    AncillaNotClean(f64),

    #[error("+1 eigenspace of the walk on the busy subspace has dimension {0}, expected 1")]
    DegenerateFixedSpace(usize),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
