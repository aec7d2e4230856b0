//! Domain types shared across the crate. Plain immutable values, no I/O.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TypeError;
use crate::scalar::Real;

/// Default number of difference frames per analysis window.
pub const DEFAULT_WINDOW_LEN: usize = 20;

/// Identifier of one video feed. Non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StreamId(String);

impl StreamId {
    pub fn new(id: impl Into<String>) -> Result<Self, TypeError> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(TypeError::InvalidStreamId(id));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for StreamId {
    type Error = TypeError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<StreamId> for String {
    fn from(id: StreamId) -> Self {
        id.0
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Row-major 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    index: u64,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, index: u64, pixels: Vec<u8>) -> Result<Self, TypeError> {
        if width == 0 || height == 0 {
            return Err(TypeError::EmptyFrame { width, height });
        }
        if pixels.len() != width * height {
            return Err(TypeError::PixelCount {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            index,
            pixels,
        })
    }

    /// Frame of a single repeated intensity.
    pub fn filled(width: usize, height: usize, index: u64, value: u8) -> Result<Self, TypeError> {
        Self::new(width, height, index, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// `len + 1` consecutive frames of one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameWindow {
    stream: StreamId,
    frames: Vec<Frame>,
}

impl FrameWindow {
    /// Builds a window; `frames.len() - 1` becomes the sequence length L.
    pub fn new(stream: StreamId, frames: Vec<Frame>) -> Result<Self, TypeError> {
        if frames.len() < 2 {
            return Err(TypeError::WindowTooShort(frames.len()));
        }
        let dims = frames[0].dims();
        for pair in frames.windows(2) {
            if pair[1].dims() != dims {
                return Err(TypeError::DimensionMismatch {
                    expected: dims,
                    actual: pair[1].dims(),
                });
            }
            if pair[1].index() != pair[0].index() + 1 {
                return Err(TypeError::NonConsecutive {
                    previous: pair[0].index(),
                    next: pair[1].index(),
                });
            }
        }
        Ok(Self { stream, frames })
    }

    /// Like [`FrameWindow::new`] but also checks the sequence length.
    pub fn with_len(stream: StreamId, frames: Vec<Frame>, len: usize) -> Result<Self, TypeError> {
        if frames.len() != len + 1 {
            return Err(TypeError::WindowLength {
                expected: len + 1,
                actual: frames.len(),
            });
        }
        Self::new(stream, frames)
    }

    pub fn stream(&self) -> &StreamId {
        &self.stream
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Number of differences this window yields.
    pub fn len(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn reversed(&self) -> Self {
        let mut frames = self.frames.clone();
        frames.reverse();
        let first = frames[0].index();
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(k, f)| f.with_index(first - self.len() as u64 + k as u64))
            .collect();
        Self {
            stream: self.stream.clone(),
            frames,
        }
    }
}

/// L pixel-wise absolute differences of adjacent frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffWindow {
    stream: StreamId,
    diffs: Vec<Frame>,
}

impl DiffWindow {
    pub fn new(stream: StreamId, diffs: Vec<Frame>) -> Result<Self, TypeError> {
        if diffs.is_empty() {
            return Err(TypeError::WindowTooShort(0));
        }
        let dims = diffs[0].dims();
        if let Some(bad) = diffs.iter().find(|d| d.dims() != dims) {
            return Err(TypeError::DimensionMismatch {
                expected: dims,
                actual: bad.dims(),
            });
        }
        Ok(Self { stream, diffs })
    }

    pub fn stream(&self) -> &StreamId {
        &self.stream
    }

    pub fn diffs(&self) -> &[Frame] {
        &self.diffs
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(width, height)` of every diff frame.
    pub fn dims(&self) -> (usize, usize) {
        self.diffs[0].dims()
    }
}

/// Non-empty list of detector scores, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T: Real = f64>(Vec<T>);

impl<T: Real> ScoreVector<T> {
    pub fn new(scores: Vec<T>) -> Result<Self, TypeError> {
        if scores.is_empty() {
            return Err(TypeError::EmptyScores);
        }
        if let Some(bad) = scores
            .iter()
            .find(|s| !(**s >= T::zero() && **s <= T::one()))
        {
            return Err(TypeError::ScoreOutOfRange(bad.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self(scores))
    }

    pub fn single(score: T) -> Result<Self, TypeError> {
        Self::new(vec![score])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn sum(&self) -> T {
        self.0.iter().copied().sum()
    }

    /// The decision statistic.
    pub fn mean(&self) -> T {
        self.sum() / T::from_count(self.0.len())
    }
}

/// Which modality produced a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Video,
    Audio,
    Fused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult<T: Real = f64> {
    pub stream: StreamId,
    pub cycle: u64,
    pub scores: ScoreVector<T>,
    pub detected: bool,
    pub source: Source,
}

impl<T: Real> DetectionResult<T> {
    /// Applies the decision rule `mean(scores) > threshold`.
    pub fn decide(stream: StreamId, cycle: u64, scores: ScoreVector<T>, threshold: T, source: Source) -> Self {
        let detected = scores.mean() > threshold;
        Self {
            stream,
            cycle,
            scores,
            detected,
            source,
        }
    }

    /// The `isDetected` indicator: `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.detected {
            1
        } else {
            -1
        }
    }
}

/// Per-stream scheduler state.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamState<T: Real = f64> {
    pub stream: StreamId,
    /// Priority probability.
    pub p: T,
    /// Confidence coefficient.
    pub c: T,
    pub last_serviced: Option<u64>,
    /// Cycles since last service.
    pub wait: u64,
}

/// Scheduler parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig<T: Real = f64> {
    pub n_streams: usize,
    pub budget: usize,
    /// Queue rebuild period in cycles.
    pub tau: u64,
    pub p_floor: T,
    pub aging_alpha: T,
    /// Hard wait cap; `None` disables it.
    pub w_max: Option<u64>,
    pub threshold: T,
    /// Cost units charged per queue entry on each rebuild.
    pub queue_cost: T,
}

impl<T: Real> SchedulerConfig<T> {
    /// Defaults: τ=1, p_floor=0, α=0.01, w_max=200, threshold=0.5, unit rebuild cost.
    pub fn new(n_streams: usize, budget: usize) -> Result<Self, TypeError> {
        let cfg = Self {
            n_streams,
            budget,
            tau: 1,
            p_floor: T::zero(),
            aging_alpha: T::lit(0.01),
            w_max: Some(200),
            threshold: T::lit(0.5),
            queue_cost: T::one(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        let bad = |what: &str| Err(TypeError::Config(what.to_string()));
        if self.n_streams == 0 {
            return bad("n_streams must be at least 1");
        }
        if self.budget == 0 || self.budget > self.n_streams {
            return bad("budget must be in 1..=n_streams");
        }
        if self.tau == 0 {
            return bad("tau must be at least 1");
        }
        if !(self.p_floor >= T::zero() && self.p_floor < T::one()) {
            return bad("p_floor must be in [0, 1)");
        }
        if !(self.aging_alpha >= T::zero()) || !self.aging_alpha.is_finite() {
            return bad("aging_alpha must be finite and >= 0");
        }
        if self.w_max == Some(0) {
            return bad("w_max must be at least 1");
        }
        if !(self.threshold > T::zero() && self.threshold < T::one()) {
            return bad("threshold must be in (0, 1)");
        }
        if !(self.queue_cost >= T::zero()) || !self.queue_cost.is_finite() {
            return bad("queue_cost must be finite and >= 0");
        }
        Ok(())
    }

    /// True when any starvation guard is active.
    pub fn aging_enabled(&self) -> bool {
        self.aging_alpha > T::zero() || self.w_max.is_some()
    }
}

/// Half-open cycle interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
}

impl Interval {
    pub fn contains(&self, cycle: u64) -> bool {
        self.start <= cycle && cycle < self.end
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Ground-truth violent intervals, per stream.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventTimeline {
    streams: Vec<(StreamId, Vec<Interval>)>,
}

impl EventTimeline {
    pub fn new(mut streams: Vec<(StreamId, Vec<Interval>)>) -> Result<Self, TypeError> {
        streams.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in streams.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(TypeError::DuplicateStream(pair[0].0.to_string()));
            }
        }
        for (id, intervals) in &streams {
            if intervals.iter().any(Interval::is_empty) {
                return Err(TypeError::BadTimeline(format!("{id}: empty interval")));
            }
            if intervals.windows(2).any(|w| w[0].end > w[1].start) {
                return Err(TypeError::BadTimeline(format!("{id}: intervals unsorted or overlapping")));
            }
        }
        Ok(Self { streams })
    }

    pub fn streams(&self) -> impl Iterator<Item = &StreamId> {
        self.streams.iter().map(|(id, _)| id)
    }

    pub fn intervals(&self, stream: &StreamId) -> &[Interval] {
        match self.streams.binary_search_by(|(id, _)| id.cmp(stream)) {
            Ok(i) => &self.streams[i].1,
            Err(_) => &[],
        }
    }

    pub fn is_violent(&self, stream: &StreamId, cycle: u64) -> bool {
        let iv = self.intervals(stream);
        let i = iv.partition_point(|x| x.end <= cycle);
        iv.get(i).is_some_and(|x| x.contains(cycle))
    }

    pub fn event_count(&self) -> usize {
        self.streams.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StreamId, &[Interval])> {
        self.streams.iter().map(|(id, v)| (id, v.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(s: &str) -> StreamId {
        StreamId::new(s).unwrap()
    }

    #[test]
    fn stream_id_rejects_whitespace_and_empty() {
        assert!(StreamId::new("").is_err());
        assert!(StreamId::new("cam 1").is_err());
        assert!(StreamId::new("cam-1").is_ok());
    }

    #[test]
    fn frame_checks_pixel_count() {
        assert!(Frame::new(2, 2, 0, vec![0; 3]).is_err());
        assert!(Frame::new(0, 2, 0, vec![]).is_err());
        assert!(Frame::new(2, 2, 0, vec![0; 4]).is_ok());
    }

    #[test]
    fn window_rejects_gaps_and_mismatched_dims() {
        let f = |i, w| Frame::filled(w, 2, i, 0).unwrap();
        assert!(FrameWindow::new(sid("a"), vec![f(0, 2), f(2, 2)]).is_err());
        assert!(FrameWindow::new(sid("a"), vec![f(0, 2), f(1, 3)]).is_err());
        assert!(FrameWindow::new(sid("a"), vec![f(0, 2)]).is_err());
        let w = FrameWindow::with_len(sid("a"), vec![f(4, 2), f(5, 2), f(6, 2)], 2).unwrap();
        assert_eq!(w.len(), 2);
        assert!(FrameWindow::with_len(sid("a"), vec![f(4, 2), f(5, 2)], 2).is_err());
    }

    #[test]
    fn score_vector_range() {
        assert!(ScoreVector::<f64>::new(vec![]).is_err());
        assert!(ScoreVector::new(vec![0.0, 1.0]).is_ok());
        assert!(ScoreVector::new(vec![1.0 + 1e-12]).is_err());
        assert!(ScoreVector::new(vec![-0.0f32, 0.5]).is_ok());
        assert!(ScoreVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn detection_sign() {
        let s = ScoreVector::single(0.9).unwrap();
        let r = DetectionResult::decide(sid("a"), 0, s, 0.5, Source::Video);
        assert!(r.detected);
        assert_eq!(r.sign(), 1);
        let s = ScoreVector::single(0.5).unwrap();
        let r = DetectionResult::decide(sid("a"), 0, s, 0.5, Source::Video);
        assert_eq!(r.sign(), -1);
    }

    #[test]
    fn scheduler_config_bounds() {
        assert!(SchedulerConfig::<f64>::new(4, 5).is_err());
        assert!(SchedulerConfig::<f64>::new(0, 0).is_err());
        let mut c = SchedulerConfig::<f64>::new(4, 2).unwrap();
        c.p_floor = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn timeline_lookup() {
        let t = EventTimeline::new(vec![(
            sid("a"),
            vec![Interval { start: 2, end: 4 }, Interval { start: 6, end: 7 }],
        )])
        .unwrap();
        let a = sid("a");
        let hits: Vec<u64> = (0..10).filter(|&c| t.is_violent(&a, c)).collect();
        assert_eq!(hits, vec![2, 3, 6]);
        assert!(!t.is_violent(&sid("b"), 3));
        let overlapping = EventTimeline::new(vec![(
            sid("a"),
            vec![Interval { start: 2, end: 5 }, Interval { start: 4, end: 7 }],
        )]);
        assert!(overlapping.is_err());
    }
}
