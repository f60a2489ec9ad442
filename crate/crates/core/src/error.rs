use thiserror::Error;

/// Failures surfaced by the numerical routines.
///
/// Numeric payloads are carried as `f64` regardless of the working precision
/// so that callers can report them uniformly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({left_rows}x{left_cols} vs {right_rows}x{right_cols})")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("full QR needs rows >= cols, got {rows}x{cols}")]
    WideQr { rows: usize, cols: usize },
    #[error("element count {len} does not match {rows}x{cols}")]
    ElementCount { rows: usize, cols: usize, len: usize },
    #[error("non-finite element at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is numerically singular (sigma_min ~ {sigma_min:e})")]
    Singular { sigma_min: f64 },
    #[error("SVD did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Padé denominator is numerically singular (sigma_min ~ {sigma_min:e})")]
    SingularPadeDenominator { sigma_min: f64 },
    #[error("A_p is numerically singular (sigma_min ~ {sigma_min:e}); an eigenvalue of (A_p, B_p) is near zero")]
    SingularImplicitDenominator { sigma_min: f64 },
    #[error("A_p + B_p is numerically singular (sigma_min ~ {sigma_min:e})")]
    SingularProjectorSum { sigma_min: f64 },
    #[error("pencil is numerically singular at quadrature node phi = {phi} (sigma_n ~ {sigma_n:e}); eigenvalue near the unit circle")]
    SingularQuadratureNode { phi: f64, sigma_n: f64 },
    #[error("block matrix of order {order} exceeds the dense size guard {limit}")]
    SizeGuard { order: usize, limit: usize },
    #[error("matrix is rank deficient (sigma_min ~ {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },
    #[error("matrix is not unitary: ||Q^H Q - I||_2 = {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not lower triangular with real diagonal: {0}")]
    NotLowerTriangular(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
