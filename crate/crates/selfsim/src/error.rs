use std::fmt;

/// How a command failed; each kind has its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Numerical,
    Invariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Numerical,
            message: message.into(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Invariant,
            message: message.into(),
        }
    }

    /// 2 validation, 3 numerical failure, 4 invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Validation => 2,
            Kind::Numerical => 3,
            Kind::Invariant => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Tags library errors with the module that raised them.
pub trait InModule<T> {
    fn in_module(self, module: &str) -> CliResult<T>;
}

impl<T> InModule<T> for selfsim_core::Result<T> {
    fn in_module(self, module: &str) -> CliResult<T> {
        self.map_err(|e| {
            let message = format!("{module}: {e}");
            if e.is_validation() {
                CliError::validation(message)
            } else {
                CliError::numerical(message)
            }
        })
    }
}
