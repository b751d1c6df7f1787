use thiserror::Error;

use crate::optics::PhaseSymbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("no pulses recorded for state {0}; cannot estimate its cost-matrix row")]
    EmptyClass(PhaseSymbol),

    #[error("no provable security: gap g = {gap:e} is not positive")]
    NoSecurity { gap: f64 },

    #[error("threshold ordering violated: requires {0}")]
    Ordering(&'static str),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Parameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
