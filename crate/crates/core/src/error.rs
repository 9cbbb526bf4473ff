use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index pair ({i}, {j}) violates 1 <= i < j <= {m}")]
    IndexOutOfRange { i: usize, j: usize, m: usize },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NonConvergence { sweeps: usize, off_norm: f64 },

    #[error("conjugate gradient did not converge within {iterations} iterations (relative residual {relative_residual:e})")]
    CgNonConvergence {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("amplitude equation has no root for rho0 = {rho0} on (0, {t_max:e}]")]
    NoRoot { rho0: f64, t_max: f64 },

    #[error("amplitude map is constant ({value}); every t > 0 solves it or none does")]
    Degenerate { value: f64 },

    #[error("no linear (k = 1) solution: Lambda has trivial kernel in even dimension {m}")]
    NoLinearSolution { m: usize },

    #[error("gradient norm c vanishes; the strong-form residual is undefined")]
    ZeroGradient,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid layout: {0}")]
    BadLayout(String),

    #[error("bump support |center| + s = {reach} must lie strictly inside radius {radius}")]
    SupportEscapesDomain { reach: f64, radius: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
