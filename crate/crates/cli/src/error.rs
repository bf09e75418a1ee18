use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing flags; exits with status 2.
    Usage(String),
    Core(nti::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<nti::Error> for CliError {
    fn from(e: nti::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn io_err(path: &std::path::Path, source: std::io::Error) -> CliError {
    CliError::Core(nti::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
