use std::path::PathBuf;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported problem class: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size cap exceeded: {what} has {actual}, cap is {cap}")]
    SizeCap { what: String, actual: usize, cap: usize },

    #[error("embedding failed at {gadget}: {reason}")]
    Embedding { gadget: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at {locus}: {message}")]
    Parse { locus: String, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(locus: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            locus: locus.into(),
            message: message.to_string(),
        }
    }

    /// Stable machine-readable category string.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Unsupported(_) => "unsupported",
            Error::Domain(_) => "domain",
            Error::SizeCap { .. } => "size_cap",
            Error::Embedding { .. } => "embedding",
            Error::Numerical(_) => "numerical",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code used by the CLI: 3 for validation-type failures,
    /// 4 for size caps, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_)
            | Error::Unsupported(_)
            | Error::Domain(_)
            | Error::Embedding { .. }
            | Error::Parse { .. } => 3,
            Error::SizeCap { .. } => 4,
            Error::Numerical(_) | Error::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
