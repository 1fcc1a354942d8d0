use std::io;

use thiserror::Error;

use crate::protocol::ErrorCode;
use crate::value::ValueType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueError {
    #[error("non-finite float rejected")]
    NonFinite,
    #[error("expected {expected}, got {found}")]
    TypeMismatch { expected: ValueType, found: String },
    #[error("unknown type name {0:?}")]
    UnknownType(String),
    #[error("integer {0} does not fit in 64 bits")]
    OutOfRange(String),
    #[error("not a JSON scalar: {0}")]
    NotScalar(String),
}

impl ValueError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ValueError::TypeMismatch { .. } => ErrorCode::TypeMismatch,
            _ => ErrorCode::InvalidValue,
        }
    }
}

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("tag {0:?} is already registered")]
    DuplicateTag(String),
    #[error("a directory is already running in this process")]
    AlreadyRunning,
    #[error("no directory is running in this process")]
    NotRunning,
    #[error("tags must be non-empty")]
    InvalidTag,
    #[error("port {port} unavailable: {source}")]
    PortUnavailable {
        port: u16,
        #[source]
        source: io::Error,
    },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("connection to port {port} refused")]
    ConnectionRefused { port: u16 },
    #[error("remote error: {0}")]
    Remote(ErrorCode),
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ControlError {
    /// Wire error code closest to this failure, if one exists.
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ControlError::DuplicateTag(_) => Some(ErrorCode::DuplicateTag),
            ControlError::UnknownTag(_) => Some(ErrorCode::UnknownTag),
            ControlError::Value(e) => Some(e.code()),
            ControlError::Remote(code) => Some(*code),
            _ => None,
        }
    }

    pub fn is_connection_failure(&self) -> bool {
        matches!(
            self,
            ControlError::ConnectionRefused { .. } | ControlError::Io(_) | ControlError::Protocol(_)
        )
    }
}
