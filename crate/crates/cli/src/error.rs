use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A problem located in an input file.
    #[error("{}:{line}:{column}: {name}: {message}", path.display())]
    Input { path: PathBuf, line: usize, column: usize, name: &'static str, message: String },
    #[error("{}: {}", .0.name(), .0)]
    Domain(#[from] sponge_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Stable error name: the core variant name for domain errors.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Input { name, .. } => name,
            CliError::Domain(e) => e.name(),
            CliError::Io { .. } | CliError::Output(_) => "Io",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
