use std::path::PathBuf;

use ldfront_core::dispersion::DispersionError;
use ldfront_core::greenlab::GreenError;
use ldfront_core::lattice::LatticeError;
use ldfront_core::stability::StabilityError;
use ldfront_core::wavefront::WaveError;
use ldfront_core::{KernelError, ModelError};
use thiserror::Error;

/// Exit status for invalid input: config, files, parameters, speeds.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for a computation that ran but failed numerically.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("output directory {0} is not empty; pass --force to overwrite")]
    OutputExists(PathBuf),
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn file(path: impl Into<PathBuf>, message: impl ToString) -> CliError {
        CliError::File { path: path.into(), message: message.to_string() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Abscissa { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        use DispersionError::*;
        match e {
            Kernel(k) => k.into(),
            InvalidProblem(_) | Hypotheses { .. } | BelowMinimalSpeed { .. } | CriticalSpeed { .. } | Inadmissible { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<WaveError> for CliError {
    fn from(e: WaveError) -> Self {
        match e {
            WaveError::Dispersion(d) => d.into(),
            WaveError::Kernel(k) => k.into(),
            WaveError::BelowMinimalSpeed { .. } | WaveError::Settings(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::Kernel(k) => k.into(),
            LatticeError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        use StabilityError::*;
        match e {
            Lattice(l) => l.into(),
            Dispersion(d) => d.into(),
            Kernel(k) => k.into(),
            Invalid(_) | Degenerate | NotWeighted { .. } | FitWindow { .. } => CliError::Validation(e.to_string()),
            NoThreshold { .. } | BoundaryContamination { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GreenError> for CliError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::Kernel(k) => k.into(),
            GreenError::Quadrature { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
