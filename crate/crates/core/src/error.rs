use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("matrix is singular over GF(2)")]
    SingularMatrix,

    #[error(
        "Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})"
    )]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("{what} search exhausted after {trials} trials")]
    SearchExhausted { what: &'static str, trials: usize },

    #[error("target vector has zero norm")]
    ZeroNorm,

    #[error("epsilon must lie in (0, 1/2), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("no diagonal entry reaches 3/4 * 2^-n; input is not a rank-1 description at the stated precision")]
    NotRankOne,

    #[error("register of {qubits} qubits exceeds the simulation limit of {limit}")]
    RegisterTooLarge { qubits: usize, limit: usize },

    #[error("oracle does not match plan: {0}")]
    OracleMismatch(String),

    #[error("malformed oracle data: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
