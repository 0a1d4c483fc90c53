use std::path::PathBuf;

/// Errors shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing data: {0}")]
    Missing(String),
    #[error("singular matrix ({what}): condition number {condition:.3e}")]
    Singular { what: String, condition: f64 },
    #[error("no convergence in {what}: residual {residual:.3e}")]
    NonConvergence { what: String, residual: f64 },
    #[error("problem too large: estimated {estimate} cells, limit {limit}")]
    TooLarge { estimate: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
