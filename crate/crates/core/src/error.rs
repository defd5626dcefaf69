use thiserror::Error;

/// Errors raised by chain construction, spectral analysis, quench dynamics,
/// phase-boundary search and the oscillator-network integrator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bond {bond} would have negative coupling {value} Hz")]
    NegativeCoupling { bond: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("chiral symmetry violated: {0}")]
    SymmetryViolation(String),

    #[error("initial state is not sublattice-polarized (chirality = {chirality})")]
    NotPolarized { chirality: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("bracket [{lo}, {hi}] does not straddle the boundary (dpt(lo) = {dpt_lo}, dpt(hi) = {dpt_hi})")]
    BadBracket {
        lo: f64,
        hi: f64,
        dpt_lo: bool,
        dpt_hi: bool,
    },

    #[error("time step {dt} s too coarse: must not exceed {max} s")]
    StepTooCoarse { dt: f64, max: f64 },

    #[error("demodulation window {window} s exceeds limit {limit} s")]
    WindowTooLong { window: f64, limit: f64 },

    #[error("sample {index} has zero norm across all oscillators")]
    ZeroSample { index: usize },

    #[error("trajectory format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
