use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("gamma ratio is not a rational multiple of a power of C(s): {0}")]
    IrreducibleRatio(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("residual imaginary unit in a real expression: {0}")]
    ResidualImaginary(String),
    #[error("unassigned index '{0}'")]
    UnassignedIndex(String),
    #[error("integral diverges: {0}")]
    Divergence(String),
    #[error("cutoff too small: {0}")]
    Cutoff(String),
    #[error("zero covector: {0}")]
    ZeroXi(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
