//! Error type carrying the process exit code.

use std::fmt;

pub const USAGE: u8 = 2;
pub const FORMAT: u8 = 3;
pub const NUMERIC: u8 = 4;
pub const IO: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: NUMERIC, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self { code: IO, message: format!("{}: {e}", path.display()) }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<thzkit::Error> for Failure {
    fn from(e: thzkit::Error) -> Self {
        use thzkit::Error as E;
        let code = match &e {
            E::InvalidInput(_) | E::Index(_) => USAGE,
            E::Format(_) | E::Dimension(_) => FORMAT,
            E::Io(_) => IO,
            E::Geometry(_)
            | E::NoBand(_)
            | E::Model(_)
            | E::Gating(_)
            | E::DegenerateRange(_)
            | E::NumericOverflow(_)
            | E::Divergence { .. } => NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        thzkit::Error::from(e).into()
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
