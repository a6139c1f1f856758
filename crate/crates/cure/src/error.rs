//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The k_sigma-th nearest neighbor of a vertex is a duplicate point, so the
    /// local bandwidth would be zero.
    #[error("degenerate bandwidth: vertex {vertex} has a duplicate point as its {k}-th nearest neighbor (sigma = 0)")]
    DegenerateBandwidth { vertex: usize, k: usize },

    /// A connected component of the graph contains no labeled vertex, so the
    /// Euler-Lagrange system is singular.
    #[error("singular system: vertex {vertex} lies in a connected component with no labeled vertex")]
    UnlabeledComponent { vertex: usize },

    /// Dense factorization hit a pivot below the singularity threshold.
    #[error("singular system: factorization pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("conjugate gradient did not converge within {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("inpainting aborted at outer iteration {outer_step}: conjugate gradient did not converge within {iterations} iterations (relative residual {residual:.3e})")]
    OuterNonConvergence {
        outer_step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("idx parse error at byte {offset}: {message}")]
    IdxParse { offset: u64, message: String },

    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedImage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for usage/input errors, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateBandwidth { .. }
            | Error::UnlabeledComponent { .. }
            | Error::SingularMatrix { .. }
            | Error::NonConvergence { .. }
            | Error::OuterNonConvergence { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
