use std::path::PathBuf;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Saturation at or below the residual value has no finite capillary pressure.
    #[error("saturation {0} is at or below residual saturation; capillary pressure is unbounded")]
    DegenerateSaturation(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("generalized pressure {u} is at or below the minimal value {u_min}")]
    BelowMinimalPressure { u: f64, u_min: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("scalar problem is not coercive (quadratic coefficient {0})")]
    NotCoercive(f64),

    #[error("solver did not converge after {} iterations (relative residual {:e}){}", report.iterations, report.relative_residual, step.map(|n| format!(" at time step {n}")).unwrap_or_default())]
    NonConvergence {
        report: Box<SolveReport>,
        step: Option<usize>,
    },

    #[error("parse error in {path}: {message} (line {line}, column {column})")]
    Parse {
        path: PathBuf,
        message: String,
        line: usize,
        column: usize,
    },

    #[error("invalid configuration: {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a time-step index to a solver failure.
    pub fn at_step(self, n: usize) -> Self {
        match self {
            Error::NonConvergence { report, .. } => Error::NonConvergence {
                report,
                step: Some(n),
            },
            other => other,
        }
    }
}
