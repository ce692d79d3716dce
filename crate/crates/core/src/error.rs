//! Crate-wide error with a stable category name and process exit code.

use thiserror::Error;

use crate::eval::EvalError;
use crate::io::IoError;
use crate::monotone::MapError;
use crate::rx::RxError;
use crate::scdt::ScdtError;
use crate::subspace::SubspaceError;
use crate::synth::SynthError;
use crate::types::TypeError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Transform(#[from] ScdtError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Rx(#[from] RxError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    BadParameter(String),
}

fn type_category(e: &TypeError) -> &'static str {
    match e {
        TypeError::NonFinite { .. } | TypeError::BadScore { .. } => "NonFinite",
        TypeError::OutOfBounds { .. } => "OutOfBounds",
        TypeError::BadDomain { .. } => "BadDomain",
        TypeError::BadShape(_) | TypeError::EmptyCube(_) => "ShapeMismatch",
    }
}

fn scdt_category(e: &ScdtError) -> &'static str {
    match e {
        ScdtError::NegativeInput { .. } => "NegativeInput",
        ScdtError::DegenerateMass { .. } => "DegenerateMass",
        ScdtError::BadGrid(_) => "BadParameter",
        ScdtError::BadProfile { .. } => "BadProfile",
        ScdtError::Signal(t) => type_category(t),
    }
}

impl Error {
    /// Short CamelCase name for the failure, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io(e) => match e {
                IoError::Io { .. } => "IoError",
                IoError::Parse { .. } => "ParseError",
                IoError::UnsupportedField { .. } => "UnsupportedField",
                IoError::SizeMismatch { .. } => "SizeMismatch",
                IoError::Type(t) => type_category(t),
            },
            Error::Type(t) => type_category(t),
            Error::Transform(e) => scdt_category(e),
            Error::Subspace(e) => match e {
                SubspaceError::TooFewSamples(_) => "TooFewSamples",
                SubspaceError::InconsistentLength { .. } | SubspaceError::LengthMismatch { .. } => "ShapeMismatch",
                SubspaceError::DegenerateData => "DegenerateData",
                SubspaceError::BadThreshold(_) => "BadParameter",
                SubspaceError::Transform(e) => scdt_category(e),
                SubspaceError::Type(t) => type_category(t),
            },
            Error::Rx(e) => match e {
                RxError::SingularCovariance { .. } => "SingularCovariance",
                RxError::TooFewPixels(_) => "TooFewSamples",
                RxError::BadRidge(_) => "BadParameter",
                RxError::LengthMismatch { .. } => "ShapeMismatch",
                RxError::Type(t) => type_category(t),
            },
            Error::Synth(e) => match e {
                SynthError::Type(t) => type_category(t),
                _ => "BadSpec",
            },
            Error::Map(_) => "BadSpec",
            Error::Eval(e) => match e {
                EvalError::NoAnomalies => "NoAnomalies",
                EvalError::NoBackground => "NoBackground",
                EvalError::ShapeMismatch { .. } | EvalError::LengthMismatch { .. } => "ShapeMismatch",
                EvalError::NonFiniteScore(_) => "NonFinite",
                EvalError::BadTarget(_) => "BadParameter",
                EvalError::Type(t) => type_category(t),
            },
            Error::BadParameter(_) => "BadParameter",
        }
    }

    /// 2 for invalid parameters, 4 for numerical breakdown, 3 for anything
    /// wrong with the input data.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "BadParameter" => EXIT_USAGE,
            "SingularCovariance" | "DegenerateData" | "DegenerateMass" => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        }
    }

    /// One line: `error: <Category>: <message>`.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.category(), msg)
    }
}
