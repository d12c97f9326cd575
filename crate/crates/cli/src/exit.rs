use std::fmt;

pub const OK: i32 = 0;
pub const INPUT: i32 = 2;
pub const NO_PATH: i32 = 3;
pub const INTERNAL: i32 = 4;

/// A failed command and the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: INTERNAL,
            message: message.into(),
        }
    }

    /// Prefix the message with where the error came from.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<fipp::Error> for CliError {
    fn from(e: fipp::Error) -> Self {
        use fipp::Error as E;
        let code = match &e {
            E::NoPath => NO_PATH,
            E::Parse { .. }
            | E::InvalidParameter(_)
            | E::OutOfBounds(_)
            | E::NonMonotonicTime { .. }
            | E::EmptyTrajectory
            | E::EmptyLog
            | E::UnknownScenarioKind(_)
            | E::Json(_) => INPUT,
            _ => INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
