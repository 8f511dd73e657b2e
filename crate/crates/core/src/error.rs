use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the model-building, simulation and post-processing stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mass matrix is not positive definite at dof {dof} ({label})")]
    MassNotPositive { dof: usize, label: String },

    #[error("stiffness matrix is singular on the massless dofs")]
    SingularMasslessBlock,

    #[error("generalized eigenvalue problem failed: {0}")]
    Eigen(String),

    #[error("retained set omits rigid-body mode {0}; residual flexibility is undefined")]
    RigidModeOmitted(usize),

    #[error(
        "residual boundary flexibility is singular (all boundary-active flexibility is \
         already retained); lower the mode cutoff"
    )]
    SingularResidualFlexibility,

    #[error(
        "contact solver did not converge in {iterations} iterations \
         (complementarity residual {residual:.3e}, max penetration {penetration:.3e} m)"
    )]
    ContactNotConverged {
        iterations: usize,
        residual: f64,
        penetration: f64,
    },

    #[error("penetration {penetration:.3e} m at contact pair {pair} exceeds gap tolerance")]
    Penetration { pair: usize, penetration: f64 },

    #[error("time step {dt:.3e} s is unstable: dt * omega_max = {product:.3} > 2")]
    UnstableStep { dt: f64, product: f64 },

    #[error("instability detected at t = {time:.3e} s: energy grew by factor {ratio:.3}")]
    EnergyGrowth { time: f64, ratio: f64 },

    #[error("no contact window in trajectory")]
    NoContact,

    #[error("least-squares design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("{path}: {message} at line {line}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config line {line}: {key} {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for filesystem failures, as opposed to numerical or input errors.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    /// True for configuration and input validation failures.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Config { .. } | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
