use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh invariant violated by {entity} {index}: {msg}")]
    MeshInvariant {
        entity: &'static str,
        index: usize,
        msg: String,
    },

    #[error("mesh quality error: triangle {triangle} has area {area:e}")]
    MeshQuality { triangle: usize, area: f64 },

    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix: pivot {pivot:e} at step {step}")]
    Singular { step: usize, pivot: f64 },

    #[error("matrix is not positive definite (Cholesky failed at row {0})")]
    NotPositiveDefinite(usize),

    #[error("interior Helmholtz problem on subdomain {subdomain} is singular (local resonance)")]
    Resonance { subdomain: usize },

    #[error(
        "edge {edge} supports only {available} interior trace functions but {requested} modes were \
         requested; enrich the underlying space by refining the mesh or raising the order"
    )]
    EnrichSpace {
        edge: usize,
        requested: usize,
        available: usize,
    },

    #[error("entry ({row}, {col}) lies outside the declared band (kl = {kl}, ku = {ku})")]
    BandOverflow {
        row: usize,
        col: usize,
        kl: usize,
        ku: usize,
    },

    #[error("trace mismatch of {mismatch:e} on dof {dof} during reconstruction")]
    TraceMismatch { dof: usize, mismatch: f64 },

    #[error("problem size {size} exceeds the cap {cap}: {hint}")]
    CapExceeded {
        size: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideMesh(f64, f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures (singular systems, resonances) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotPositiveDefinite(_)
                | Error::Resonance { .. }
                | Error::TraceMismatch { .. }
        )
    }
}
