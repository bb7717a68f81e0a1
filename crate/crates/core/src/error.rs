use thiserror::Error;

use crate::geometry::format::ParseError;
use crate::physics::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mass must be positive and finite, got {0}")]
    NonPositiveMass(f64),

    #[error("invalid pulse sequence: {}", describe(.0))]
    InvalidSequence(Vec<Violation>),

    #[error("sequence is not closed in phase space (moment0 = {moment0:e} 1/m, moment1 = {moment1:e} s/m)")]
    OpenSequence { moment0: f64, moment1: f64 },

    #[error("closed-form valid only for linear potential (gravity gradient = {0:e} 1/s^2)")]
    NonzeroGradient(f64),

    #[error("time {t:e} s outside [0, {t_end:e}] s")]
    TimeOutOfRange { t: f64, t_end: f64 },

    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn describe(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
