use brw_core::BrwError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<BrwError> for CliError {
    fn from(e: BrwError) -> Self {
        match e {
            BrwError::Validation(_)
            | BrwError::Domain(_)
            | BrwError::WindowTooSmall { .. }
            | BrwError::StepTooLarge { .. } => CliError::Usage(e.to_string()),
            BrwError::Numerical(_) | BrwError::Estimation(_) => CliError::Numerical(e.to_string()),
            BrwError::Contradiction(_) => CliError::Invariant(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(BrwError::Validation("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(BrwError::StepTooLarge { dt: 1.0, bound: 0.1 }).exit_code(), 1);
        assert_eq!(CliError::from(BrwError::Numerical("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(BrwError::Estimation("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(BrwError::Contradiction("x".into())).exit_code(), 3);
    }
}
