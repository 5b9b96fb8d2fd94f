use thiserror::Error;

/// Errors raised by the solvers and their supporting linear algebra.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix: {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("oversampled beyond rank: r + p = {requested} exceeds min dimension {available}")]
    OversampledBeyondRank { requested: usize, available: usize },

    #[error("degenerate subspace: {0}")]
    DegenerateSubspace(&'static str),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate overlap: {0}")]
    DegenerateOverlap(String),

    #[error("media not uniformly positive: a = {value} at ({x}, {y})")]
    MediaNotPositive { value: f64, x: f64, y: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("singular matrix: zero pivot at row {row}")]
    SingularMatrix { row: usize },

    #[error("transport operator singular (zero pivot at row {row})")]
    TransportSingular { row: usize },

    #[error("source must vanish on overlap: nonzero entry at lattice index {index}")]
    SourceOutsideInterior { index: usize },

    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("Newton iteration diverged for sample {sample} after {attempts} attempts")]
    NewtonDiverged { sample: usize, attempts: usize },

    #[error("Newton iteration stalled at residual {residual:e} after {iterations} iterations")]
    NewtonStalled { residual: f64, iterations: usize },

    #[error("too few points: {found} within radius, need at least {needed}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
