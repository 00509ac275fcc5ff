use alloc::string::String;
use core::fmt;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix had the wrong size.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Invalid configuration or hyperparameter.
    Config(String),
    /// Invalid input data (ordering, range, gaps).
    Input(String),
    /// A numerical routine failed (singular system, zero variance).
    Numeric(String),
    /// Latent truth was required but the data set does not carry it.
    MissingTruth,
    /// A constructed network exceeds its declared size or weight bound.
    Contract(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { what, expected, found } => {
                write!(f, "shape mismatch for {what}: expected {expected}, found {found}")
            }
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Input(m) => write!(f, "input error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::MissingTruth => write!(f, "config error: data set carries no latent truth"),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { what, expected, found })
    }
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
