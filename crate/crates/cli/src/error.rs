use std::fmt;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(String),
    Certificate(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Certificate(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Certificate(m) => write!(f, "certificate failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tcomp_core::Error> for CliError {
    fn from(e: tcomp_core::Error) -> Self {
        use tcomp_core::Error as E;
        match e {
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::Parse { .. } | E::Io(_) => CliError::Io(e.to_string()),
            E::NumericFailure { .. } | E::ContractViolation(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
