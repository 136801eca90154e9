use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A denominator built from the data is zero (or not finite).
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("instrument degeneracy: {0}")]
    InstrumentDegenerate(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    /// The caller combined inputs that do not belong together.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("too many degenerate replications: {excluded} of {total} excluded")]
    TooManyExcluded { excluded: usize, total: usize },
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures caused by the numbers rather than by the inputs'
    /// shape or the environment.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_) | Error::InstrumentDegenerate(_) | Error::Singular(_) | Error::TooManyExcluded { .. }
        )
    }
}
