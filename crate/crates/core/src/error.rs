use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell index ({i}, {j}) out of range for {nx}x{ny} mesh")]
    CellOutOfRange { i: usize, j: usize, nx: usize, ny: usize },

    #[error("degree mismatch: field has k={field}, context expects k={expected}")]
    DegreeMismatch { field: usize, expected: usize },

    #[error("non-finite value in field at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("singular block-circulant system (N={n}, condition estimate {condition:.3e})")]
    SingularSystem { n: usize, condition: f64 },

    #[error("defining condition violated: {what} residual {residual:.3e} > {tol:.1e}")]
    ConditionViolated { what: String, residual: f64, tol: f64 },

    #[error("solution blew up at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },

    #[error("maximum step count {max_steps} exceeded before t_final = {t_final}")]
    MaxStepsExceeded { max_steps: usize, t_final: f64 },

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Case { context: String, source: Box<DdgError> },
}

impl From<std::io::Error> for DdgError {
    fn from(e: std::io::Error) -> Self {
        DdgError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DdgError>;
