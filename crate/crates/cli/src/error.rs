use std::fmt;
use std::process::ExitCode;

/// A failed command together with its exit status.
#[derive(Debug)]
pub struct CliError {
    user: bool,
    message: String,
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        Self {
            user: true,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(if self.user { 2 } else { 1 })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ehdr_core::Error> for CliError {
    fn from(e: ehdr_core::Error) -> Self {
        let missing = matches!(&e, ehdr_core::Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound);
        Self {
            user: e.is_user_error() || missing,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
