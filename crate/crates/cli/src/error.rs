use ifgen::cost::CostError;
use ifgen::search::SearchError;
use ifgen::sql::LogError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unparseable query log or input file.
    #[error("{0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    /// A log query the interface cannot express, or an InterfaceSpec that fails validation.
    #[error("{0}")]
    Inexpressible(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Config(_) => 3,
            CliError::Inexpressible(_) => 4,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Config(m) => CliError::Config(m),
            SearchError::Cost(CostError::Inexpressible(q)) => {
                CliError::Inexpressible(format!("query is not expressible by the interface: {q}"))
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}
