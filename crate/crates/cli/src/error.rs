use std::fmt;

use thiserror::Error;

/// A configuration problem, located by line and `section.key` when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: field.to_string(), message: message.into() }
    }

    pub fn at(line: usize, field: &str, message: impl Into<String>) -> Self {
        Self::new(Some(line), field, message)
    }

    pub fn missing(field: &str) -> Self {
        Self::new(None, field, "required field is missing")
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.field.is_empty()) {
            (Some(l), false) => write!(f, "line {l}, {}: {}", self.field, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "{}: {}", self.field, self.message),
            (None, true) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Core(#[from] ranksde_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Explosion(String),
}

impl CliError {
    /// Process exit code: 2 config, 3 explosion, 4 assumption violation,
    /// 5 numeric or internal failure.
    pub fn exit_code(&self) -> i32 {
        use ranksde_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Explosion(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidParameters(_) | E::DimensionMismatch { .. } | E::InvalidState(_) | E::RankOutOfRange { .. } => 2,
                E::AssumptionViolation(_) | E::UnsupportedDomain | E::UseMonteCarlo(_) => 4,
                E::BoundaryExhausted(_) => 3,
                E::StepTooCloseToBoundary { .. } | E::NotPsd { .. } | E::EmptyPath | E::Numeric(_) => 5,
            },
            CliError::Io(_) => 5,
        }
    }
}
