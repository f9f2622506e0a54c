use thiserror::Error;

/// Errors produced by the solver and its supporting kernels.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid interval: lo={lo} must be finite and less than hi={hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid contour parameters: {0}")]
    InvalidContour(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix A is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix B is not positive definite")]
    IndefiniteB,

    #[error("shift z = {re}+{im}i is (numerically) an eigenvalue of the pencil")]
    SingularShift { re: f64, im: f64 },

    #[error("shifted system at quadrature node {node} is (numerically) singular")]
    SingularNode { node: usize },

    #[error("filter evaluated at a quadrature node (singular evaluation)")]
    NodeCollision,

    #[error("subspace block is identically zero (no spectral content left)")]
    ZeroSubspace,

    #[error("reduced matrix B_U lost positive definiteness (badly truncated basis)")]
    ReducedIndefinite,

    #[error("no active vectors remain while unconverged eigenpairs are expected")]
    EmptyActiveSet,

    #[error("matrix dimensions do not match: {0}")]
    ShapeError(String),

    #[error("matrix market parse error: {0}")]
    ParseError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<V> = std::result::Result<V, SolverError>;
