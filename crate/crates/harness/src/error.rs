use std::fmt;

/// Harness failures.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    Config(String),
    Io(String),
    /// An estimator or the data generator failed.
    Estimation(String),
    /// Nothing to emit.
    EmptyTable,
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "invalid scenario: {m}"),
            HarnessError::Io(m) => write!(f, "i/o error: {m}"),
            HarnessError::Estimation(m) => write!(f, "estimation failed: {m}"),
            HarnessError::EmptyTable => f.write_str("result table is empty"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<otfs_burst::Error> for HarnessError {
    fn from(e: otfs_burst::Error) -> Self {
        HarnessError::Estimation(e.to_string())
    }
}
