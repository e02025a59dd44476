use std::process::ExitCode;

use memctl_core::bmi::BmiError;
use memctl_core::design_pipeline::DesignError;
use memctl_core::rgs::RgsError;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("{0}")]
    Certificate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Certificate(_) => 4,
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::NoCertificate(_)
            | DesignError::C1Failed
            | DesignError::Beta(_)
            | DesignError::GainSpan { .. }
            | DesignError::Schmitt { .. } => CliError::Certificate(e.to_string()),
            DesignError::Bmi(BmiError::Solver(_)) => CliError::Divergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RgsError> for CliError {
    fn from(e: RgsError) -> Self {
        match e {
            RgsError::Diverged { .. } => CliError::Divergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<BmiError> for CliError {
    fn from(e: BmiError) -> Self {
        match e {
            BmiError::Solver(_) => CliError::Divergence(e.to_string()),
            BmiError::NoStabilizingGain(_) => CliError::Certificate(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
