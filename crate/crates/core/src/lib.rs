//! Compute-budgeted scheduling of violence-detection inference over many
//! concurrent video streams.
//!
//! Streams compete for a fixed number of inference slots per cycle. Each
//! stream's priority rises when its last window fired and decays otherwise,
//! damped by a confidence term; aging and a hard wait cap keep quiet streams
//! from starving. Around that core sit frame preprocessing, a pluggable
//! detector contract (with an external-process wire protocol), audio
//! features with min-max fusion, and a deterministic simulator for comparing
//! scheduling policies.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod audio;
pub mod detector;
mod error;
pub mod preprocess;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod sim;
pub mod types;

pub use error::TypeError;
pub use scalar::Real;
pub use types::{
    DetectionResult, DiffWindow, EventTimeline, Frame, FrameWindow, Interval, SchedulerConfig, ScoreVector,
    Source, StreamId, StreamState, DEFAULT_WINDOW_LEN,
};

pub type PriorityTable64 = scheduler::PriorityTable<f64>;
pub type PriorityTable32 = scheduler::PriorityTable<f32>;
pub type SchedulerConfig64 = types::SchedulerConfig<f64>;
pub type SchedulerConfig32 = types::SchedulerConfig<f32>;
pub type ScoreVector64 = types::ScoreVector<f64>;
pub type ScoreVector32 = types::ScoreVector<f32>;
pub type AudioClip64 = audio::AudioClip<f64>;
pub type AudioClip32 = audio::AudioClip<f32>;
pub type Spectrogram64 = audio::Spectrogram<f64>;
pub type Spectrogram32 = audio::Spectrogram<f32>;
