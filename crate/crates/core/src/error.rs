use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-conforming mesh: vertex {vertex} lies inside edge ({a}, {b})")]
    NonConforming { vertex: usize, a: usize, b: usize },

    #[error("non-manifold edge ({0}, {1}): more than two adjacent triangles")]
    NonManifold(usize, usize),

    #[error("non-orientable or inconsistently oriented mesh at edge ({0}, {1})")]
    NonOrientable(usize, usize),

    #[error("surface kind mismatch: {0}")]
    KindMismatch(String),

    #[error("degenerate triangle {0}")]
    DegenerateCell(usize),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular local system in {0}")]
    SingularLocalSystem(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("matrix of order {n} needs about {bytes} bytes, above the limit of {limit}")]
    MemoryGuard { n: usize, bytes: usize, limit: usize },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("cholesky factorization failed: {0}")]
    NotPositiveDefinite(String),

    #[error("evaluation point {0:?} is too close to the surface")]
    TooClose([f64; 3]),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
