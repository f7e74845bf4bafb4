use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space configuration: {0}")]
    InvalidHilbert(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("amplitude |{amplitude:.4}| violates truncation safety for fock_dim = {fock_dim}")]
    Truncation { amplitude: f64, fock_dim: usize },

    #[error("minus cat is undefined for |alpha| = {0:.3e}")]
    DegenerateCat(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("adaptive step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("measurement branch has probability {0:.3e}")]
    ZeroProbability(f64),

    #[error("lifetime fit diverged (residual {residual:.4})")]
    FitDiverged { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("cannot parse pulse sequence line {line}: {message}")]
    SequenceParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
