use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] treesne::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}, line {line}: {msg}")]
    Config { origin: String, line: usize, msg: String },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            return CliError::Core(treesne::Error::NoSuchFile { path });
        }
        CliError::Io { path, source }
    }

    /// 1 for numerical failures, 2 for usage, configuration and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_computational() => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
