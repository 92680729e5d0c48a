use std::fmt;

use pscat_core::Error;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    ConfigInvalid,
    RegimeViolation,
    IoFailure,
    ComputationFailed,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::ComputationFailed => 1,
            ErrorKind::ConfigInvalid => 2,
            ErrorKind::RegimeViolation => 3,
            ErrorKind::IoFailure => 4,
        }
    }
}

/// Failure reported on stderr as one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub error: ErrorKind,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            error: kind,
            message: message.into(),
            exit_code: kind.exit_code(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::ConfigInvalid, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::IoFailure, message)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self)
            .unwrap_or_else(|_| format!("{{\"message\":{:?}}}", self.message))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.error, self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::ProtectiveViolation { .. }
            | Error::RegimeViolation(_)
            | Error::CutoffViolation { .. } => ErrorKind::RegimeViolation,
            Error::Io(_) => ErrorKind::IoFailure,
            Error::InsufficientSupport { .. }
            | Error::DegenerateEigenproblem { .. }
            | Error::EmptySupport { .. }
            | Error::EmptyBins { .. }
            | Error::IllConditioned(_)
            | Error::InsufficientSpan(_)
            | Error::NonMonotoneBeyondTolerance { .. } => ErrorKind::ComputationFailed,
            _ => ErrorKind::ConfigInvalid,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
