use std::path::PathBuf;

use weakdyn::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Usage(_) | Self::Io { .. } => 2,
            Self::Solver(e) => match e {
                Error::ExceptionalHorizon { .. } => 3,
                Error::SingularSystem { .. } | Error::DegenerateClosure { .. } | Error::OutOfDomain { .. } => 4,
                _ => 2,
            },
            Self::Invariant(_) => 5,
        }
    }
}
