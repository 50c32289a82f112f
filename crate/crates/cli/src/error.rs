use std::io;

use nsix_core::evalbench::EvalError;
use nsix_core::invindex::{IngestError, PersistError};
use nsix_core::EngineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Runtime(_) => 3,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: io::Error) -> Self {
        Self::Runtime(format!("{context}: {e}"))
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        if e.kind.is_data_error() {
            Self::Data(e.to_string())
        } else {
            Self::Runtime(e.to_string())
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::Io(_) => Self::Runtime(e.to_string()),
            PersistError::Format(_) => Self::Data(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidTopK => Self::Usage(e.to_string()),
            EngineError::ZeroVector | EngineError::EmptyIndex | EngineError::UnknownDocument(_) => {
                Self::Data(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = |e: &EvalError| -> fn(String) -> CliError {
            let mut inner = e;
            while let EvalError::Cell { source, .. } = inner {
                inner = source;
            }
            match inner {
                EvalError::InvalidParams(_) => CliError::Usage,
                EvalError::Io(_) => CliError::Runtime,
                EvalError::Engine(EngineError::InvalidTopK) => CliError::Usage,
                _ => CliError::Data,
            }
        };
        code(&e)(e.to_string())
    }
}
