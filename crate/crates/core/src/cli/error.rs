use thiserror::Error;

use crate::dataset::DatasetError;
use crate::expectations::ExpectationError;
use crate::fusion::FusionError;
use crate::numerics::NumericsError;
use crate::synth::SynthError;

/// Command failure, classified by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        Self::Numerical(e.to_string())
    }
}

impl From<ExpectationError> for CliError {
    fn from(e: ExpectationError) -> Self {
        match e {
            ExpectationError::InvalidConfig(m) => Self::Config(m),
            ExpectationError::Numerics(n) => n.into(),
            ExpectationError::UnpairedDistributions => Self::Numerical(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::InvalidConfig(m) => Self::Config(m),
            FusionError::Expectation(x) => x.into(),
            FusionError::Numerics(n) => n.into(),
            FusionError::NonConvergence(_) => Self::Numerical(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(m) => Self::Config(m),
            SynthError::Numerics(n) => n.into(),
        }
    }
}
