//! Failures of a command, sorted by exit status.

use iltl_pomdp::ldba::LdbaError;
use iltl_pomdp::learner::LearnError;
use iltl_pomdp::logic::LogicError;
use iltl_pomdp::pomdp::PomdpError;
use iltl_pomdp::product::ProductError;
use iltl_pomdp::value::ValueError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Inputs parse but break an invariant.
    #[error("{0}")]
    Invalid(String),

    /// Missing, unreadable or malformed files.
    #[error("{0}")]
    Input(String),

    /// Artifacts were written but the iteration ran out of budget.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }

    pub fn input(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PomdpError> for CliError {
    fn from(e: PomdpError) -> Self {
        match e {
            PomdpError::Io(_)
            | PomdpError::Json(_)
            | PomdpError::Format(_)
            | PomdpError::DimensionMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LdbaError> for CliError {
    fn from(e: LdbaError) -> Self {
        match e {
            LdbaError::Io(_) | LdbaError::Json(_) | LdbaError::Format(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        match e {
            LogicError::Syntax { .. } | LogicError::Table(_) => CliError::Input(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> Self {
        match e {
            ProductError::Pomdp(e) => e.into(),
            ProductError::Logic(e) => e.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ValueError> for CliError {
    fn from(e: ValueError) -> Self {
        match e {
            ValueError::Product(e) => e.into(),
            ValueError::Pomdp(e) => e.into(),
            ValueError::Io(_) | ValueError::Json(_) | ValueError::Format(_) => {
                CliError::Input(e.to_string())
            }
            ValueError::NonConvergence { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Value(e) => e.into(),
            LearnError::Product(e) => e.into(),
            LearnError::Io(_) | LearnError::Json(_) | LearnError::Checkpoint(_) => {
                CliError::Input(e.to_string())
            }
            LearnError::NonConvergence { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}
