use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series: variable sets differ ({left} vs {right})")]
    VarMismatch { left: String, right: String },

    #[error("series: unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("series: substituting a nonzero constant into `{var}` needs infinitely many terms below the truncation")]
    InfiniteSubstitution { var: String },

    #[error("series: exp_zero needs a series without constant term")]
    NonzeroConstant,

    #[error("series: singular linear part: {0}")]
    Singular(String),

    #[error("series: implicit system inconsistent, residual survives at degree {degree}")]
    Inconsistent { degree: u32 },

    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("generating function constraint violated: {0}")]
    Constraint(String),

    #[error("stationary phase: {0}")]
    Degenerate(String),

    #[error("numeric oracle did not converge: {0}")]
    NonConvergence(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}
