use std::fmt;
use std::str::FromStr;

use log::warn;

use super::{SimError, SyntheticSpec};
use crate::detector::{detect, DetectInput, Detector, DetectorError, DetectorKind};
use crate::preprocess::diff_window;
use crate::scheduler::PriorityTable;
use crate::sim::frames::gen_synthetic_frames;
use crate::types::{DetectionResult, EventTimeline, Interval, SchedulerConfig, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Priority,
    RoundRobin,
    ComputeAll,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Priority => "priority",
            Self::RoundRobin => "round_robin",
            Self::ComputeAll => "compute_all",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "priority" => Ok(Self::Priority),
            "round_robin" => Ok(Self::RoundRobin),
            "compute_all" => Ok(Self::ComputeAll),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

/// One record of the run log.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Service {
        cycle: u64,
        stream: StreamId,
        score: f64,
        detected: bool,
    },
    Alert {
        cycle: u64,
        stream: StreamId,
        event_start: u64,
        ttd: u64,
    },
    Update {
        cycle: u64,
        stream: StreamId,
        p: f64,
        c: f64,
    },
    Skip {
        cycle: u64,
        stream: StreamId,
        reason: String,
    },
}

pub trait EventSink {
    fn record(&mut self, event: Event);
}

impl EventSink for Vec<Event> {
    fn record(&mut self, event: Event) {
        self.push(event);
    }
}

/// Discards every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn record(&mut self, _: Event) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub policy: Policy,
    pub seed: u64,
    pub n: usize,
    pub b: usize,
    pub tau: u64,
    pub events_total: u64,
    pub events_detected: u64,
    pub events_missed: u64,
    pub mean_ttd: f64,
    pub p95_ttd: f64,
    pub services_total: u64,
    pub maintenance_total: f64,
    pub max_wait: u64,
}

/// Work item for one serviced stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub stream: StreamId,
    pub cycle: u64,
    /// Whether the stream is violent at this cycle.
    pub truth: bool,
}

/// What came back for one job.
#[derive(Debug, Clone)]
pub enum Outcome {
    Detected(DetectionResult),
    Skipped { stream: StreamId, reason: String },
}

impl Outcome {
    pub fn stream(&self) -> &StreamId {
        match self {
            Self::Detected(r) => &r.stream,
            Self::Skipped { stream, .. } => stream,
        }
    }

    pub fn from_detection(stream: &StreamId, result: Result<DetectionResult, DetectorError>) -> Self {
        match result {
            Ok(r) => Self::Detected(r),
            Err(e) => {
                warn!("stream {stream}: detector failed, skipping: {e}");
                Self::Skipped {
                    stream: stream.clone(),
                    reason: e.reason().to_string(),
                }
            }
        }
    }
}

struct EventTracker {
    intervals: Vec<Interval>,
    alerted: Vec<bool>,
}

/// Cycle-by-cycle driver: policy selection, alert bookkeeping, state updates
/// and metrics. Detection itself happens outside, so the same engine serves
/// the sequential simulator and the threaded pipeline.
pub struct Engine {
    policy: Policy,
    seed: u64,
    budget: usize,
    table: PriorityTable<f64>,
    streams: Vec<StreamId>,
    timeline: EventTimeline,
    trackers: Vec<EventTracker>,
    waits: Vec<u64>,
    max_wait: u64,
    ttds: Vec<u64>,
    services: u64,
    cycle: u64,
    jobs: Vec<Job>,
}

impl Engine {
    pub fn new(
        timeline: EventTimeline,
        config: SchedulerConfig<f64>,
        policy: Policy,
        seed: u64,
    ) -> Result<Self, SimError> {
        let streams: Vec<StreamId> = timeline.streams().cloned().collect();
        if streams.len() != config.n_streams {
            return Err(SimError::StreamMismatch {
                config: config.n_streams,
                timeline: streams.len(),
            });
        }
        let mut config = config;
        if policy == Policy::ComputeAll {
            config.budget = config.n_streams;
        }
        let budget = config.budget;
        let table = PriorityTable::new(streams.clone(), config)?;
        let trackers = streams
            .iter()
            .map(|id| {
                let intervals = timeline.intervals(id).to_vec();
                EventTracker {
                    alerted: vec![false; intervals.len()],
                    intervals,
                }
            })
            .collect();
        Ok(Self {
            policy,
            seed,
            budget,
            waits: vec![0; streams.len()],
            table,
            streams,
            timeline,
            trackers,
            max_wait: 0,
            ttds: Vec::new(),
            services: 0,
            cycle: 0,
            jobs: Vec::new(),
        })
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn timeline(&self) -> &EventTimeline {
        &self.timeline
    }

    pub fn table(&self) -> &PriorityTable<f64> {
        &self.table
    }

    pub fn threshold(&self) -> f64 {
        self.table.config().threshold
    }

    /// Selects this cycle's streams; jobs come back in stream-id order.
    pub fn plan_cycle(&mut self) -> Vec<Job> {
        let n = self.streams.len();
        let mut chosen: Vec<StreamId> = match self.policy {
            Policy::Priority => self.table.select_streams(),
            Policy::RoundRobin | Policy::ComputeAll => {
                let start = (self.cycle as usize % n) * self.budget % n;
                let picked: Vec<usize> = (0..self.budget).map(|j| (start + j) % n).collect();
                for (i, w) in self.waits.iter_mut().enumerate() {
                    *w = if picked.contains(&i) { 0 } else { *w + 1 };
                }
                picked.into_iter().map(|i| self.streams[i].clone()).collect()
            }
        };
        let wait_now = match self.policy {
            Policy::Priority => self.table.max_wait(),
            _ => self.waits.iter().copied().max().unwrap_or(0),
        };
        self.max_wait = self.max_wait.max(wait_now);
        chosen.sort();
        self.jobs = chosen
            .into_iter()
            .map(|stream| Job {
                truth: self.timeline.is_violent(&stream, self.cycle),
                stream,
                cycle: self.cycle,
            })
            .collect();
        self.services += self.jobs.len() as u64;
        self.jobs.clone()
    }

    /// Consumes the outcomes for the planned jobs (any order) and emits the
    /// cycle's records in stream-id order.
    pub fn complete_cycle(&mut self, mut outcomes: Vec<Outcome>, sink: &mut dyn EventSink) -> Result<(), SimError> {
        outcomes.sort_by(|a, b| a.stream().cmp(b.stream()));
        let planned: Vec<&StreamId> = self.jobs.iter().map(|j| &j.stream).collect();
        let got: Vec<&StreamId> = outcomes.iter().map(Outcome::stream).collect();
        if planned != got {
            return Err(SimError::OutcomeMismatch { cycle: self.cycle });
        }
        let results: Vec<DetectionResult> = outcomes
            .iter()
            .filter_map(|o| match o {
                Outcome::Detected(r) => Some(r.clone()),
                Outcome::Skipped { .. } => None,
            })
            .collect();
        let mut updates = if self.policy == Policy::Priority {
            self.table.apply_cycle_results(&results)?.into_iter().peekable()
        } else {
            Vec::new().into_iter().peekable()
        };
        let cycle = self.cycle;
        for outcome in outcomes {
            match outcome {
                Outcome::Skipped { stream, reason } => sink.record(Event::Skip { cycle, stream, reason }),
                Outcome::Detected(r) => {
                    let stream = r.stream.clone();
                    sink.record(Event::Service {
                        cycle,
                        stream: stream.clone(),
                        score: r.scores.mean(),
                        detected: r.detected,
                    });
                    if r.detected {
                        if let Some((event_start, ttd)) = self.credit_alert(&stream, cycle) {
                            sink.record(Event::Alert {
                                cycle,
                                stream: stream.clone(),
                                event_start,
                                ttd,
                            });
                        }
                    }
                    if updates.peek().is_some_and(|u| u.stream == stream) {
                        let u = updates.next().expect("peeked");
                        sink.record(Event::Update { cycle, stream, p: u.p, c: u.c });
                    }
                }
            }
        }
        self.jobs.clear();
        self.cycle += 1;
        Ok(())
    }

    /// First detection inside an event (or its one-cycle grace tail) raises the alert.
    fn credit_alert(&mut self, stream: &StreamId, cycle: u64) -> Option<(u64, u64)> {
        let i = self.streams.binary_search(stream).ok()?;
        let tracker = &mut self.trackers[i];
        let containing = tracker.intervals.iter().position(|iv| iv.contains(cycle));
        let idx = containing.or_else(|| tracker.intervals.iter().position(|iv| iv.end == cycle))?;
        if tracker.alerted[idx] {
            return None;
        }
        tracker.alerted[idx] = true;
        let start = tracker.intervals[idx].start;
        self.ttds.push(cycle - start);
        Some((start, cycle - start))
    }

    pub fn metrics(&self) -> SimMetrics {
        let events_total: u64 = self.trackers.iter().map(|t| t.intervals.len() as u64).sum();
        let events_detected = self.ttds.len() as u64;
        let mut sorted = self.ttds.clone();
        sorted.sort_unstable();
        let mean_ttd = if sorted.is_empty() {
            0.0
        } else {
            sorted.iter().sum::<u64>() as f64 / sorted.len() as f64
        };
        let p95_ttd = if sorted.is_empty() {
            0.0
        } else {
            let rank = (0.95 * sorted.len() as f64).ceil() as usize;
            sorted[rank.max(1) - 1] as f64
        };
        let cfg = self.table.config();
        let maintenance_total = match self.policy {
            Policy::Priority => cfg.queue_cost * cfg.n_streams as f64 * self.table.rebuilds() as f64,
            _ => 0.0,
        };
        SimMetrics {
            policy: self.policy,
            seed: self.seed,
            n: self.streams.len(),
            b: self.budget,
            tau: cfg.tau,
            events_total,
            events_detected,
            events_missed: events_total - events_detected,
            mean_ttd,
            p95_ttd,
            services_total: self.services,
            maintenance_total,
            max_wait: self.max_wait,
        }
    }
}

/// Settings of one simulated run beyond the scheduler config.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub cycles: u64,
    pub seed: u64,
    /// Footage used when the detector needs frames.
    pub frames: SyntheticSpec,
}

/// Runs `detector` on one job, synthesizing and differencing frames if it needs them.
pub fn service_job(
    detector: &mut dyn Detector,
    job: &Job,
    timeline: &EventTimeline,
    opts: &SimOptions,
    needs_frames: bool,
    threshold: f64,
) -> Outcome {
    let diffs = if needs_frames {
        match gen_synthetic_frames(&job.stream, job.cycle, timeline, &opts.frames, opts.seed) {
            Ok(w) => Some(diff_window(&w)),
            Err(e) => {
                return Outcome::Skipped {
                    stream: job.stream.clone(),
                    reason: format!("frames: {e}"),
                }
            }
        }
    } else {
        None
    };
    let input = DetectInput {
        stream: &job.stream,
        cycle: job.cycle,
        diffs: diffs.as_ref(),
        truth: Some(job.truth),
    };
    Outcome::from_detection(&job.stream, detect(detector, &input, threshold))
}

/// Sequential simulation of `opts.cycles` cycles.
pub fn run_sim(
    timeline: &EventTimeline,
    config: &SchedulerConfig<f64>,
    policy: Policy,
    detector: &DetectorKind,
    opts: &SimOptions,
    sink: &mut dyn EventSink,
) -> Result<SimMetrics, SimError> {
    let mut engine = Engine::new(timeline.clone(), config.clone(), policy, opts.seed)?;
    let mut det = detector.build()?;
    let needs_frames = detector.needs_frames();
    let threshold = engine.threshold();
    for _ in 0..opts.cycles {
        let jobs = engine.plan_cycle();
        let outcomes = jobs
            .iter()
            .map(|job| service_job(det.as_mut(), job, timeline, opts, needs_frames, threshold))
            .collect();
        engine.complete_cycle(outcomes, sink)?;
    }
    Ok(engine.metrics())
}

/// One row of a τ sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub tau: u64,
    pub mean_ttd: f64,
    pub maintenance_total: f64,
    /// `mean_ttd + maintenance_total / cycles`.
    pub end_to_end_delay: f64,
    pub metrics: SimMetrics,
}

/// Priority-policy runs over each τ on the same timeline and seed, sorted by τ.
pub fn bench_tau(
    base: &SchedulerConfig<f64>,
    taus: &[u64],
    timeline: &EventTimeline,
    detector: &DetectorKind,
    opts: &SimOptions,
) -> Result<Vec<TauRow>, SimError> {
    if taus.is_empty() {
        return Err(SimError::EmptyTauList);
    }
    let mut taus = taus.to_vec();
    taus.sort_unstable();
    taus.dedup();
    taus.into_iter()
        .map(|tau| {
            let mut cfg = base.clone();
            cfg.tau = tau;
            let m = run_sim(timeline, &cfg, Policy::Priority, detector, opts, &mut NullSink)?;
            Ok(TauRow {
                tau,
                mean_ttd: m.mean_ttd,
                maintenance_total: m.maintenance_total,
                end_to_end_delay: m.mean_ttd + m.maintenance_total / opts.cycles.max(1) as f64,
                metrics: m,
            })
        })
        .collect()
}
