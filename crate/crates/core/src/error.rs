use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LadaError>;

/// Errors raised anywhere in the engine.
///
/// Each variant maps onto one process exit code (see [`LadaError::exit_code`]),
/// so the CLI can report failures without inspecting messages.
#[derive(Debug, Error)]
pub enum LadaError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl LadaError {
    pub fn config(msg: impl Into<String>) -> Self {
        LadaError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        LadaError::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        LadaError::Numeric(msg.into())
    }

    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        LadaError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// 2 = configuration, 3 = data, 4 = numeric/runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            LadaError::Config(_) => 2,
            LadaError::Data(_) | LadaError::Parse { .. } | LadaError::Io(_) | LadaError::Csv(_) => {
                3
            }
            LadaError::Numeric(_) => 4,
        }
    }
}
