use std::fmt;

/// Command-level failures, partitioned by exit code: configuration
/// problems exit with 2, numerical failures with 3, verification
/// failures with 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Verification(msg) => write!(f, "verification failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Core errors surfacing while a command runs are numerical failures;
/// configuration problems are caught during validation.
impl From<dualstop_core::Error> for CliError {
    fn from(err: dualstop_core::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(format!("io: {err}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
