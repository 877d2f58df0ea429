use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pair configuration: {0}")]
    InvalidSpec(String),

    #[error("matrix is not in the ambient algebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("matrix size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("loop parameter must be non-zero")]
    ZeroLambda,

    #[error("invalid loop parameter {0}: {1}")]
    InvalidLambda(f64, String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rank obstruction: n={n} > rank={rank}")]
    RankObstruction { n: usize, rank: usize },

    #[error("Maurer-Cartan residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    McViolation { residual: f64, tol: f64 },

    #[error("degenerate coframe (smallest singular value {sigma_min:.3e})")]
    DegenerateCoframe { sigma_min: f64 },

    #[error("lambda=1 data is not totally geodesic (second fundamental form {residual:.3e})")]
    NotTotallyGeodesic { residual: f64 },

    #[error("operation requires the {expected} family")]
    WrongFamily { expected: &'static str },

    #[error("frame drifted off the isometry group (drift {drift:.3e} > {tol:.3e})")]
    Drift { drift: f64, tol: f64 },

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
