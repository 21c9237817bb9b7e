use std::fmt;
use std::process::ExitCode;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub source: anyhow::Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, unreadable or malformed inputs, invalid configuration.
    Usage,
    /// Failures after inputs were accepted.
    Runtime,
}

impl CliError {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: Kind::Usage, source: e.into() }
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Self { kind: Kind::Runtime, source: e.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            Kind::Usage => ExitCode::from(2),
            Kind::Runtime => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

fn is_validation(e: &rgm::error::Error) -> bool {
    use rgm::error::Error as E;
    match e {
        E::Dimension(_) | E::Empty(_) | E::Asymmetric { .. } | E::Design(_) | E::Config(_) | E::Domain(_) => true,
        E::Replicate { source, .. } => is_validation(source),
        _ => false,
    }
}

impl From<rgm::error::Error> for CliError {
    fn from(e: rgm::error::Error) -> Self {
        if is_validation(&e) {
            Self::usage(e)
        } else {
            Self::runtime(e)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
