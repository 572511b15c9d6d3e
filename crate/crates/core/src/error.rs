use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrwError {
    #[error("invalid parameter: {0}")]
    Validation(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("truncation window half-width {half_width} must exceed the absorber pair count {n}")]
    WindowTooSmall { half_width: usize, n: usize },
    #[error("step size {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal contradiction: {0}")]
    Contradiction(String),
    #[error("growth rate cannot be estimated: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, BrwError>;
