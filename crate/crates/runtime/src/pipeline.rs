//! Staged pipeline: Ingest -> Preprocess pool -> Detect pool -> Update.
//!
//! Update owns the [`Engine`]. Each cycle it hands the planned jobs to
//! Ingest, then collects exactly that many outcomes before completing the
//! cycle, so records come out in `(cycle, stream)` order regardless of how
//! many workers ran. Queues are bounded and block when full.

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, Sender};
use log::{debug, info};
use streamwatch_core::detector::{detect, DetectInput, Detector, DetectorError, DetectorKind, SidecarDetector};
use streamwatch_core::preprocess::{crop_window, diff_window, remove_borders};
use streamwatch_core::sim::{gen_synthetic_frames, Engine, EventSink, Job, Outcome, SimError, SimMetrics};
use streamwatch_core::{DiffWindow, EventTimeline, FrameWindow, StreamId};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, StreamSource};
use crate::pgm::{list_frames, read_pgm, PgmError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("detector: {0}")]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("expected {expected} detectors, got {got}")]
    DetectorCount { expected: usize, got: usize },
    #[error("a pipeline stage stopped before the run finished")]
    StageLost,
}

enum Payload {
    Frames(FrameWindow),
    Diffs(DiffWindow),
    Truth,
    Skip(String),
}

struct Item {
    job: Job,
    payload: Payload,
}

/// Where a stream's windows come from.
enum Feed {
    Synthetic,
    Files(Vec<PathBuf>),
}

struct Ingest<'a> {
    cfg: &'a RunConfig,
    timeline: &'a EventTimeline,
    feeds: Vec<(StreamId, Feed)>,
    needs_frames: bool,
}

impl Ingest<'_> {
    fn window(&self, job: &Job) -> Payload {
        if !self.needs_frames {
            return Payload::Truth;
        }
        let feed = self
            .feeds
            .binary_search_by(|(id, _)| id.cmp(&job.stream))
            .map(|i| &self.feeds[i].1)
            .expect("every job names a configured stream");
        let opts = self.cfg.sim_options();
        match feed {
            Feed::Synthetic => match gen_synthetic_frames(&job.stream, job.cycle, self.timeline, &opts.frames, opts.seed) {
                Ok(w) => Payload::Frames(w),
                Err(e) => Payload::Skip(format!("frames: {e}")),
            },
            Feed::Files(paths) => {
                let len = self.cfg.window.len;
                let first = job.cycle as usize * len;
                if first + len >= paths.len() {
                    return Payload::Skip("eof".into());
                }
                let frames: Result<Vec<_>, _> = paths[first..=first + len]
                    .iter()
                    .zip(first as u64..)
                    .map(|(p, idx)| read_pgm(p).map(|f| f.with_index(idx)))
                    .collect();
                match frames.map(|f| FrameWindow::with_len(job.stream.clone(), f, len)) {
                    Ok(Ok(w)) => Payload::Frames(w),
                    Ok(Err(e)) => Payload::Skip(format!("frames: {e}")),
                    Err(e) => Payload::Skip(format!("ingest: {e}")),
                }
            }
        }
    }
}

fn preprocess(payload: Payload, deborder: Option<u8>) -> Payload {
    match payload {
        Payload::Frames(w) => {
            let w = match deborder {
                Some(t) => {
                    let rect = remove_borders(&w.frames()[0], t);
                    match crop_window(&w, rect) {
                        Ok(c) => c,
                        Err(e) => return Payload::Skip(format!("preprocess: {e}")),
                    }
                }
                None => w,
            };
            Payload::Diffs(diff_window(&w))
        }
        other => other,
    }
}

fn run_detection(detector: &mut dyn Detector, item: Item, threshold: f64) -> Outcome {
    let Item { job, payload } = item;
    let diffs = match payload {
        Payload::Skip(reason) => {
            return Outcome::Skipped {
                stream: job.stream,
                reason,
            }
        }
        Payload::Diffs(d) => Some(d),
        Payload::Truth => None,
        Payload::Frames(_) => unreachable!("preprocess converts every frame window"),
    };
    let input = DetectInput {
        stream: &job.stream,
        cycle: job.cycle,
        diffs: diffs.as_ref(),
        truth: Some(job.truth),
    };
    Outcome::from_detection(&job.stream, detect(detector, &input, threshold))
}

/// One detector per detect worker, built from the config.
pub fn build_detectors(cfg: &RunConfig) -> Result<Vec<Box<dyn Detector>>, PipelineError> {
    let kind = cfg.detector_kind();
    (0..cfg.pipeline.workers)
        .map(|_| match &kind {
            DetectorKind::Sidecar(endpoint) => {
                let timeout = Duration::from_millis(cfg.sidecar_timeout_ms());
                Ok(Box::new(SidecarDetector::with_timeout(endpoint, timeout)?) as Box<dyn Detector>)
            }
            other => Ok(other.build()?),
        })
        .collect()
}

/// Runs the configured simulation through the staged pipeline.
pub fn run_pipeline(cfg: &RunConfig, sink: &mut dyn EventSink) -> Result<SimMetrics, PipelineError> {
    let detectors = build_detectors(cfg)?;
    run_pipeline_with(cfg, detectors, sink)
}

/// Like [`run_pipeline`] with caller-supplied detectors, one per worker.
pub fn run_pipeline_with(
    cfg: &RunConfig,
    detectors: Vec<Box<dyn Detector>>,
    sink: &mut dyn EventSink,
) -> Result<SimMetrics, PipelineError> {
    let workers = cfg.pipeline.workers;
    if detectors.len() != workers {
        return Err(PipelineError::DetectorCount {
            expected: workers,
            got: detectors.len(),
        });
    }
    let timeline = cfg.timeline()?;
    let mut feeds = Vec::with_capacity(cfg.n_streams());
    for s in &cfg.streams {
        let feed = match &s.source {
            StreamSource::Synthetic => Feed::Synthetic,
            StreamSource::Frames(dir) => Feed::Files(list_frames(dir)?),
        };
        feeds.push((s.id.clone(), feed));
    }
    feeds.sort_by(|a, b| a.0.cmp(&b.0));
    let ingest = Ingest {
        cfg,
        timeline: &timeline,
        feeds,
        needs_frames: cfg.detector_kind().needs_frames(),
    };
    let mut engine = Engine::new(timeline.clone(), cfg.scheduler_config(), cfg.policy, cfg.sim.seed)?;
    let threshold = engine.threshold();
    let deborder = cfg.window.deborder;
    let depth = cfg.queue_depth();
    info!(
        "pipeline: {} streams, budget {}, {workers} workers, queue depth {depth}",
        cfg.n_streams(),
        cfg.budget
    );

    let (plan_tx, plan_rx) = bounded::<Vec<Job>>(1);
    let (raw_tx, raw_rx) = bounded::<Item>(depth);
    let (pre_tx, pre_rx) = bounded::<Item>(depth);
    let (out_tx, out_rx) = bounded::<Outcome>(depth);

    thread::scope(|scope| {
        let ingest = &ingest;
        scope.spawn(move || ingest_stage(ingest, plan_rx, raw_tx));
        for _ in 0..workers {
            let (rx, tx) = (raw_rx.clone(), pre_tx.clone());
            scope.spawn(move || {
                for item in rx {
                    let payload = preprocess(item.payload, deborder);
                    if tx.send(Item { job: item.job, payload }).is_err() {
                        break;
                    }
                }
            });
        }
        for mut detector in detectors {
            let (rx, tx) = (pre_rx.clone(), out_tx.clone());
            scope.spawn(move || {
                for item in rx {
                    if tx.send(run_detection(detector.as_mut(), item, threshold)).is_err() {
                        break;
                    }
                }
            });
        }
        drop((raw_rx, pre_tx, pre_rx, out_tx));
        update_stage(&mut engine, cfg.sim.cycles, plan_tx, out_rx, sink)
    })?;
    Ok(engine.metrics())
}

fn ingest_stage(ingest: &Ingest<'_>, plans: Receiver<Vec<Job>>, out: Sender<Item>) {
    for jobs in plans {
        for job in jobs {
            let payload = ingest.window(&job);
            if out.send(Item { job, payload }).is_err() {
                return;
            }
        }
    }
}

fn update_stage(
    engine: &mut Engine,
    cycles: u64,
    plans: Sender<Vec<Job>>,
    outcomes: Receiver<Outcome>,
    sink: &mut dyn EventSink,
) -> Result<(), PipelineError> {
    for _ in 0..cycles {
        let jobs = engine.plan_cycle();
        let expected = jobs.len();
        debug!("cycle {}: {expected} jobs", engine.cycle());
        plans.send(jobs).map_err(|_| PipelineError::StageLost)?;
        let got = (0..expected)
            .map(|_| outcomes.recv().map_err(|_| PipelineError::StageLost))
            .collect::<Result<Vec<_>, _>>()?;
        engine.complete_cycle(got, sink)?;
    }
    Ok(())
}
