use mntris_core::ensemble::EnsembleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    ValidationFailed = 1,
    Config = 2,
    Passivity = 3,
    ErroredCells = 4,
}

impl Code {
    pub fn value(self) -> u8 {
        self as u8
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(code: Code, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self::new(Code::Config, error)
    }

    /// Passivity and infeasible-target failures map to their own code,
    /// everything else is a configuration error.
    pub fn ensemble(error: EnsembleError) -> Self {
        match error {
            EnsembleError::PassivityViolation { .. } | EnsembleError::InfeasibleTarget { .. } => {
                Self::new(Code::Passivity, error)
            }
            _ => Self::config(error),
        }
    }
}

pub type CliResult = Result<(), CliError>;
