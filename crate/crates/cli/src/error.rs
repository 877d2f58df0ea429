use std::fmt;

use crate::config::ConfigError;

/// Exit codes: 0 success, 2 configuration, 3 obstruction, 4 verification
/// failure, 5 I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Obstruction(String),
    Verification(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Obstruction(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Obstruction(m) => write!(f, "obstructed: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<reflow::Error> for CliError {
    fn from(e: reflow::Error) -> Self {
        use reflow::Error as E;
        let msg = e.to_string();
        match e {
            E::RankObstruction { n, rank } => CliError::Obstruction(format!("n={n} > rank={rank}")),
            E::Io(_) | E::Format(_) => CliError::Io(msg),
            E::McViolation { .. }
            | E::DegenerateCoframe { .. }
            | E::NotTotallyGeodesic { .. }
            | E::Drift { .. }
            | E::NotInAlgebra { .. } => CliError::Verification(msg),
            E::InvalidSpec(_)
            | E::SizeMismatch { .. }
            | E::ZeroLambda
            | E::InvalidLambda(..)
            | E::InvalidGrid(_)
            | E::WrongFamily { .. } => CliError::Config(msg),
        }
    }
}
