use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number: {0}")]
    InvalidSpin(String),

    #[error("invalid angular-momentum pair (j = {j}, m = {m})")]
    InvalidHalfInteger { j: f64, m: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vdW lifetime undefined without third body (p_N2 = 0)")]
    MissingThirdBody,

    #[error("invalid cell conditions: {0}")]
    InvalidConditions(String),

    #[error("unphysical equilibrium polarization P = {0} (|P| must be < 1)")]
    UnphysicalPolarization(f64),

    #[error("high-polarization linewidth diverges at R_op = 0")]
    ZeroPumping,

    #[error("matrix is defective within tolerance (eigenvector condition number {condition:.3e})")]
    Defective { condition: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenConvergence,

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("integration aborted at t = {time:.6e} s: {reason}")]
    Integration { time: f64, reason: String },

    #[error("steady-state solver failed: {0}")]
    SteadyState(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidConditions(_)
            | Error::MissingThirdBody
            | Error::InvalidSpin(_)
            | Error::InvalidHalfInteger { .. }
            | Error::DimensionMismatch { .. } => 2,
            _ => 3,
        }
    }
}
