//! File ingestion, configuration, serialization, the staged pipeline and
//! the `streamwatch` command line.

pub mod cli;
pub mod config;
pub mod events;
pub mod pgm;
pub mod pipeline;
pub mod wav;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use pipeline::{run_pipeline, run_pipeline_with, PipelineError};
