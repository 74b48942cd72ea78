//! Error type shared by all modules of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by motion, beat, mask, loss, diffusion, and metric
/// operations, plus file I/O and parsing failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The two 3-vectors of a 6-DOF rotation input are zero or parallel.
    #[error("degenerate 6-DOF rotation input")]
    DegenerateRotation,

    /// Degenerate rotation encountered while walking a motion sequence.
    #[error("degenerate 6-DOF rotation at frame {frame}, joint {joint}")]
    DegenerateRotationAt { frame: usize, joint: usize },

    /// An operation needs more frames than the sequence provides.
    #[error("sequence too short: need at least {needed} frames, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    /// Two inputs that must agree in shape or length do not.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A beat grid without beat frames was given to an operation that
    /// requires at least one.
    #[error("beat grid has no beat frames")]
    NoBeats,

    /// A frame index lies outside the sequence.
    #[error("frame index {index} out of range for length {length}")]
    FrameOutOfRange { index: usize, length: usize },

    /// A scalar argument violates its domain.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A diffusion step index lies outside the schedule.
    #[error("diffusion step {t} outside [{min}, {max}]")]
    StepOutOfRange { t: usize, min: usize, max: usize },

    /// A NaN or infinity appeared where finite values are required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// The injected denoiser failed; carries the step for context.
    #[error("denoiser failed at step {t}: {source}")]
    DenoiserFailed {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    /// A file violates its documented schema.
    #[error("invalid file: {reason}")]
    InvalidFile { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of numeric origin (NaN/Inf), as opposed to
    /// validation or I/O problems. The CLI maps these to a distinct
    /// exit code.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::DenoiserFailed { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
