use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug)]
pub enum Error {
    Io { path: PathBuf, source: io::Error },
    /// Malformed input; `line` is one-based.
    Parse { path: PathBuf, line: usize, msg: String },
    Solver(radi_core::Error),
    Usage(String),
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Error::Parse { path, line, msg } => write!(f, "{}:{line}: {msg}", path.display()),
            Error::Solver(e) => write!(f, "{e}"),
            Error::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Solver(e) => Some(e),
            _ => None,
        }
    }
}

impl From<radi_core::Error> for Error {
    fn from(e: radi_core::Error) -> Self {
        Error::Solver(e)
    }
}
