use thiserror::Error;

pub type Result<T, E = CatError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatError {
    #[error("invalid dimension {dim}: at least {min} basis states required")]
    InvalidDimension { dim: usize, min: usize },

    #[error("invalid tolerance `{name}` = {value}: must be positive and finite")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("Fock index {n} out of range for dimension {dim}")]
    OutOfRange { n: usize, dim: usize },

    #[error("truncation inadequate: tail mass {tail:.3e} exceeds {tol:.3e}; minimal adequate dim is {min_dim}")]
    TruncationInadequate { tail: f64, tol: f64, min_dim: usize },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian (max |O - O^dag| = {dev:.3e})")]
    NotHermitian { dev: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("degenerate witness: Gaussian minimum below {threshold:e} for every gamma")]
    DegenerateWitness { threshold: f64 },

    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
