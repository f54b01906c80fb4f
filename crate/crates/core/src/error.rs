use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("angle {theta} rad is outside the open interval (-pi/2, pi/2)")]
    AngleOutOfRange { theta: f64 },

    #[error("uniform linear array needs M >= 2 elements, got M = {num_elements}")]
    UnsupportedGeometry { num_elements: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spoofer has {angles} angles but {weights} weights (need equal, non-zero lengths)")]
    SpooferShape { angles: usize, weights: usize },

    #[error("spoofer weights must satisfy sum |q_l| = 1, got {sum}")]
    WeightNormalization { sum: f64 },

    #[error("snapshot {index} has length {len}, expected {expected}")]
    SnapshotLength { index: usize, len: usize, expected: usize },

    #[error("degenerate curvature D = {d} (Gamma = {gamma}); the MCRB is undefined")]
    DegenerateCurvature { d: f64, gamma: f64 },

    #[error("pseudo-true search did not converge (best grid angle {theta} rad)")]
    NotConverged { theta: f64 },

    #[error("the spoofed hypothesis requires a spoofer configuration")]
    MissingSpoofer,

    #[error("{trials} trials cannot resolve the requested quantile; need at least {required}")]
    InsufficientTrials { trials: u64, required: u64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
