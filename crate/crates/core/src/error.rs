use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building witnesses or evaluating bounds.
///
/// Validation failures and size guards are kept apart so the command line
/// can map them onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least {min} parties, got {n}")]
    TooFewParties { n: usize, min: usize },

    #[error("setting set must not be empty")]
    EmptySettings,

    #[error("setting index {index} out of range for {n_parties} parties (must be < N)")]
    IndexOutOfRange { index: usize, n_parties: usize },

    #[error("setting index {index} listed more than once")]
    DuplicateIndex { index: usize },

    #[error("C below |S|: C = {c}, |S| = {size}")]
    WeightBelowSize { c: f64, size: usize },

    #[error("C above 2|S|: C = {c}, 2|S| = {max}")]
    WeightAboveDouble { c: f64, max: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} limited to {max}, got {got}")]
    SizeGuard {
        what: &'static str,
        got: usize,
        max: usize,
    },

    #[error("dense and closed-form witness values disagree: {dense} vs {closed_form}")]
    ClosedFormMismatch { dense: f64, closed_form: f64 },
}

impl Error {
    /// True for size caps (dense dimension, oracle size, enumeration length).
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::SizeGuard { .. })
    }
}
