use thiserror::Error;

/// Errors raised by the pipeline operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{start}, {end}): start must be >= 0 and < end")]
    InvalidInterval { start: f64, end: f64 },

    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),

    #[error("frame rate must be positive, got {0}")]
    NonPositiveFps(f64),

    #[error("probability out of [0, 1]: {0}")]
    ProbabilityOutOfRange(f64),

    #[error("time {time} lies outside the timeline [0, {duration}]")]
    OutOfTimeline { time: f64, duration: f64 },

    #[error("score series is empty")]
    EmptySeries,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown video id `{0}`")]
    UnknownVideo(String),

    #[error("inconsistent metadata for `{id}`: {reason}")]
    InconsistentMeta { id: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
