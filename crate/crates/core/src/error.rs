use thiserror::Error;

use crate::dsl::Diagnostic;

/// Errors raised by evaluation, valuation and reporting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scenario has no actions")]
    EmptyActionSet,

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("magnitude {0} is not finite")]
    NonFiniteMagnitude(f64),

    #[error("injury class `{0}` is missing from the magnitude schedule")]
    UnknownInjuryClass(String),

    #[error("attribute `{0}` is not declared in the scenario attribute schema")]
    UnknownAttribute(String),

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("not a trolley scenario: {0}")]
    NotATrolleyScenario(String),

    #[error("no party carries a positive risk share")]
    NoExposedParties,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scenario failed validation with {} diagnostic(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
