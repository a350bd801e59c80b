use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown material `{name}` (available: {})", available.join(", "))]
    UnknownMaterial { name: String, available: Vec<String> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("density table integrates to {integrated:.9e} kg, expected {expected:.9e} kg")]
    NotNormalized { integrated: f64, expected: f64 },

    #[error("{what}: quadrature did not converge (estimated error {achieved:.3e}, target {target:.3e})")]
    Quadrature {
        what: String,
        achieved: f64,
        target: f64,
    },

    #[error("wave packet reached the grid boundary at t = {time:.6e} s (edge amplitude ratio {ratio:.3e})")]
    Containment { time: f64, ratio: f64 },

    #[error("sinusoid fit did not converge (residual rms {residual_rms:.3e})")]
    FitFailed { residual_rms: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        last_change: f64,
    },

    #[error("replay of {file} produced checksum {actual}, manifest records {expected}")]
    ReplayMismatch {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("self-test failed: {0}")]
    SelfTest(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownMaterial { .. } => "unknown_material",
            Error::InvalidInput(_) => "invalid_input",
            Error::Parse { .. } => "parse",
            Error::NotNormalized { .. } => "not_normalized",
            Error::Quadrature { .. } => "quadrature",
            Error::Containment { .. } => "containment",
            Error::FitFailed { .. } => "fit_failed",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ReplayMismatch { .. } => "replay_mismatch",
            Error::SelfTest(_) => "self_test",
            Error::Io { .. } => "io",
        }
    }

    /// Whether the error stems from bad user input rather than a numerical
    /// failure or the filesystem.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownMaterial { .. }
                | Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::NotNormalized { .. }
        )
    }
}
