use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("not a homeomorphism-compatible query: {0}")]
    NotHomeomorphism(String),

    #[error("derivative requested exactly at breakpoint {0}; pass a side")]
    AtBreakpoint(f64),

    #[error("hbar mismatch: {0} vs {1}")]
    HbarMismatch(f64, f64),

    #[error("hbar too small for requested policy: {nodes} nodes exceeds cap {cap}")]
    NodeCap { nodes: f64, cap: usize },

    #[error("Hermite table exhausted: derivative order {0} > 8")]
    HermiteOrder(usize),

    #[error("obstruction: mean of tau is {0}, constants are not coboundaries")]
    Obstruction(f64),

    #[error("near-resonant mode n={mode}: |e^(2 pi i n alpha) - 1| = {divisor:e}")]
    Resonance { mode: i64, divisor: f64 },

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("empty support mask")]
    EmptySupport,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line front end: 3 for numerical
    /// non-convergence, 2 for everything that is a bad request.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged(_) | Error::NodeCap { .. } | Error::Resonance { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
