use thiserror::Error;

/// Construction errors for the shared domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("invalid stream id {0:?}: must be non-empty with no whitespace")]
    InvalidStreamId(String),
    #[error("frame must be at least 1x1, got {width}x{height}")]
    EmptyFrame { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    PixelCount { expected: usize, actual: usize },
    #[error("window needs at least two frames, got {0}")]
    WindowTooShort(usize),
    #[error("window holds {actual} frames, expected {expected}")]
    WindowLength { expected: usize, actual: usize },
    #[error("frame dimensions {actual:?} differ from {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("frame index {next} does not follow {previous}")]
    NonConsecutive { previous: u64, next: u64 },
    #[error("score vector is empty")]
    EmptyScores,
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("duplicate stream id {0}")]
    DuplicateStream(String),
    #[error("invalid timeline: {0}")]
    BadTimeline(String),
    #[error("invalid scheduler config: {0}")]
    Config(String),
}
