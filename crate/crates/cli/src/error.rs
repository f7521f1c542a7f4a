use std::fmt;

use edgecache::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Config,
    Input,
    Io,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 2,
            Kind::Config => 3,
            Kind::Input => 4,
            Kind::Io => 5,
            Kind::Internal => 6,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Config => "config",
            Kind::Input => "input",
            Kind::Io => "io",
            Kind::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Kind::Config, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Kind::Io, message)
    }
}

/// `error kind=<kind> code=<n> message="<escaped>"` on one line.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error kind={} code={} message={:?}", self.kind.name(), self.kind.exit_code(), self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Config(_) => Kind::Config,
            Error::Io { .. } => Kind::Io,
            Error::Internal(_) => Kind::Internal,
            Error::Input(_) | Error::Range(_) | Error::AgeZero { .. } | Error::Replacement(_) | Error::Serde(_) => Kind::Input,
        };
        CliError::new(kind, e.to_string())
    }
}
