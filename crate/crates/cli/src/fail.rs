use std::fmt;

use privtree::Error;

/// A failure with its process exit code: 1 configuration, 2 input data,
/// 3 numerics.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) => 1,
            Error::InputLine { .. } | Error::Input(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Numeric(_) => 3,
        };
        CliError { code, message: e.to_string() }
    }
}
