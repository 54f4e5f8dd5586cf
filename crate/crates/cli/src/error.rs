//! Error classification and the machine-readable error report.

use psynet::dataset::DatasetError;
use psynet::ggm::GgmError;
use psynet::idiographic::IdiographicError;
use psynet::ising::IsingError;
use psynet::recurrence::RecurrenceError;
use psynet::var::VarError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Reading or writing files failed.
    Io,
    /// Bad configuration or input data.
    Validation,
    /// A numerical routine failed on valid input.
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    /// Stage that failed, such as `config`, `input` or `gvar`.
    pub context: String,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(kind: ErrorKind, context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { kind, context: context.into(), message: message.into() }
    }

    pub fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Validation, context, message)
    }

    pub fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Numeric, context, message)
    }

    pub fn io(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Io, context, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Names the person whose data caused the error.
    pub fn with_person(mut self, person: &str) -> Self {
        self.message = format!("person `{person}`: {}", self.message);
        self
    }

    /// `{"error": {"kind", "context", "message", "exit_code"}}` on one line.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "context": self.context,
                "message": self.message,
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

pub fn dataset_kind(e: &DatasetError) -> ErrorKind {
    match e {
        DatasetError::Io(_) => ErrorKind::Io,
        _ => ErrorKind::Validation,
    }
}

pub fn ising_kind(e: &IsingError) -> ErrorKind {
    match e {
        IsingError::NotPsdAfterShift(_) => ErrorKind::Numeric,
        _ => ErrorKind::Validation,
    }
}

pub fn ggm_kind(e: &GgmError) -> ErrorKind {
    match e {
        GgmError::DimensionMismatch(_) | GgmError::InvalidNetwork(_) => ErrorKind::Validation,
        _ => ErrorKind::Numeric,
    }
}

pub fn var_kind(e: &VarError) -> ErrorKind {
    match e {
        VarError::InsufficientObservations { .. } | VarError::TooFewPersons { .. } | VarError::Invalid(_) => {
            ErrorKind::Validation
        }
        VarError::Network(g) => ggm_kind(g),
        VarError::Person { source, .. } => var_kind(source),
        _ => ErrorKind::Numeric,
    }
}

pub fn idiographic_kind(e: &IdiographicError) -> ErrorKind {
    match e {
        IdiographicError::Ising(i) => ising_kind(i),
        _ => ErrorKind::Validation,
    }
}

pub fn recurrence_kind(e: &RecurrenceError) -> ErrorKind {
    match e {
        RecurrenceError::Unachievable { .. } => ErrorKind::Numeric,
        _ => ErrorKind::Validation,
    }
}

macro_rules! from_core {
    ($ty:ty, $classify:ident, $context:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($classify(&e), $context, e.to_string())
            }
        }
    };
}

from_core!(DatasetError, dataset_kind, "input");
from_core!(IsingError, ising_kind, "ising");
from_core!(GgmError, ggm_kind, "ggm");
from_core!(VarError, var_kind, "var");
from_core!(IdiographicError, idiographic_kind, "idio");
from_core!(RecurrenceError, recurrence_kind, "recurrence");
