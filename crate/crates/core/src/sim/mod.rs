//! Seeded discrete-cycle simulation of many streams sharing an inference budget.
//!
//! The time unit is the cycle, one analysis window. A run is a pure function
//! of its timeline, scheduler config, policy, detector and seed.

mod engine;
mod frames;
mod trace;

use thiserror::Error;

use crate::detector::DetectorError;
use crate::error::TypeError;
use crate::scheduler::SchedulerError;

pub use engine::{
    bench_tau, run_sim, service_job, Engine, Event, EventSink, Job, NullSink, Outcome, Policy, SimMetrics,
    SimOptions, TauRow,
};
pub use frames::{gen_synthetic_frames, SyntheticSpec, BLOCK_INTENSITY, BLOCK_SPEED};
pub use trace::{gen_timeline, TraceConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config declares {config} streams but the timeline has {timeline}")]
    StreamMismatch { config: usize, timeline: usize },
    #[error("outcomes for cycle {cycle} do not match the planned jobs")]
    OutcomeMismatch { cycle: u64 },
    #[error("tau list is empty")]
    EmptyTauList,
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Type(#[from] TypeError),
}
