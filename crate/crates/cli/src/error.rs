use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] fedga::Error),
}

impl CliError {
    /// Process exit status: 1 config, 2 data, 3 numeric, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        use fedga::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Numeric(_)) => 3,
            CliError::Io { .. } | CliError::Core(E::Io { .. }) => 4,
            CliError::Data(_) | CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
