//! Crate error type. Variants map one-to-one onto the CLI exit codes so the
//! binary can translate failures without string matching.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration, malformed input file, or violated precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Geometrically infeasible request (disconnected fluid phase, pinch-off).
    #[error("geometry infeasible: {0}")]
    Geometry(String),

    /// Data fitting failed (rank deficiency, monotonicity violation, ...).
    #[error("fit failed: {0}")]
    Fit(String),

    /// Iterative solver exhausted its budget; carries the residual history so
    /// callers can dump it for diagnosis.
    #[error("solver did not converge: {message} (final residual {final_residual:.3e})")]
    SolverDivergence {
        message: String,
        final_residual: f64,
        residual_history: Vec<f64>,
    },

    /// Mesh failed a validity check (non-manifold, not watertight, ...).
    #[error("mesh invalid: {0}")]
    MeshInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable process exit code for this error class:
    /// 0 ok, 2 input error, 3 solver non-convergence, 4 geometry infeasible,
    /// 5 mesh/output invalid.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Fit(_) | Error::Serde(_) => 2,
            Error::SolverDivergence { .. } => 3,
            Error::Geometry(_) => 4,
            Error::MeshInvalid(_) | Error::Io(_) => 5,
        }
    }
}
