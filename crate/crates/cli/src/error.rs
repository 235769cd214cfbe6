use std::fmt::Display;

use cof_core::Error;
use serde::Serialize;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// An error with its exit code, reported as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            error: "usage",
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            error: "data",
            code: EXIT_DATA,
            message: msg.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError {
            error: "numeric",
            code: EXIT_NUMERIC,
            message: msg.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) => CliError::numeric(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

/// Prefixes a core error with the path or item it concerns.
pub fn at<T>(what: impl Display, r: cof_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| {
        let mut c = CliError::from(e);
        c.message = format!("{what}: {}", c.message);
        c
    })
}
