use std::path::PathBuf;

use mlfilter_core::coupling::CouplingError;
use mlfilter_core::layout::LayoutError;
use mlfilter_core::microstrip::MicrostripError;
use mlfilter_core::prototype::PrototypeError;
use mlfilter_core::rfsim::RfError;
use thiserror::Error;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const SPEC: i32 = 2;
    pub const MATERIAL: i32 = 3;
    pub const SYNTHESIS: i32 = 4;
    pub const BAND_EDGE: i32 = 5;
    pub const LAYOUT: i32 = 6;
    pub const PARSE: i32 = 7;
    pub const SIMULATION: i32 = 8;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Spec(String),
    #[error("unknown material '{name}'; known materials: {known}")]
    UnknownMaterial { name: String, known: String },
    #[error("{0}")]
    Synthesis(#[from] MicrostripError),
    #[error("{0}")]
    BandEdge(RfError),
    #[error("{0}")]
    Layout(LayoutError),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Simulation(RfError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Spec(_) => exit::SPEC,
            CliError::UnknownMaterial { .. } => exit::MATERIAL,
            CliError::Synthesis(_) => exit::SYNTHESIS,
            CliError::BandEdge(_) => exit::BAND_EDGE,
            CliError::Layout(_) => exit::LAYOUT,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Simulation(_) => exit::SIMULATION,
            CliError::Usage(_) => exit::USAGE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse { path: path.into(), message: message.to_string() }
    }
}

impl From<PrototypeError> for CliError {
    fn from(e: PrototypeError) -> Self {
        CliError::Spec(e.to_string())
    }
}

impl From<CouplingError> for CliError {
    fn from(e: CouplingError) -> Self {
        CliError::Spec(e.to_string())
    }
}

impl From<RfError> for CliError {
    fn from(e: RfError) -> Self {
        match e {
            RfError::BandEdgeOutOfRange { .. } | RfError::InsufficientResolution { .. } => CliError::BandEdge(e),
            RfError::InvalidSweep(m) => CliError::Usage(m),
            RfError::Microstrip(m) => CliError::Synthesis(m),
            other => CliError::Simulation(other),
        }
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::Microstrip(m) => CliError::Synthesis(m),
            other => CliError::Layout(other),
        }
    }
}
