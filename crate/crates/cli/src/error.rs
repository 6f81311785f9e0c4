use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    /// A stage ran before the stage it reads from.
    #[error("missing upstream stage `{stage}`: {detail}")]
    Dependency { stage: &'static str, detail: String },

    /// A record on disk was written under a different configuration.
    #[error("store conflict: {0}")]
    Conflict(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record {path}: {detail}")]
    Record { path: String, detail: String },

    #[error(transparent)]
    Core(#[from] hardsat_core::Error),
}

impl CliError {
    /// 1 for usage, configuration and I/O problems, 2 for dependency and
    /// store conflicts, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use hardsat_core::Error as E;
        match self {
            CliError::Dependency { .. } | CliError::Conflict(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(E::Argument(_) | E::Structural(_) | E::Capacity { .. }) => 1,
            CliError::Core(_) => 3,
            CliError::Config(_) | CliError::Io { .. } | CliError::Record { .. } => 1,
        }
    }
}

pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}
