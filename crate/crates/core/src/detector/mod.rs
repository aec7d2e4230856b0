//! Detector contract and its three implementations.
//!
//! A detector maps one diff window to a non-empty score vector in `[0, 1]`;
//! the window fires when the mean score exceeds the decision threshold.

pub mod sidecar;
pub mod wire;

use std::time::Duration;

use crate::preprocess::motion_energy;
use crate::rng::{draw_unit, stream_key, Salt};
use crate::types::{DetectionResult, DiffWindow, ScoreVector, Source, StreamId};

pub use sidecar::{SidecarClient, SidecarEndpoint};
pub use wire::{DetectorError, WireError, WireMessage};

/// Score emitted by the oracle on a hit.
pub const ORACLE_HIT: f64 = 0.9;
/// Score emitted by the oracle on a miss.
pub const ORACLE_MISS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorKind {
    /// Scripted detector driven by ground truth.
    Oracle { tpr: f64, fpr: f64, seed: u64 },
    /// `score = min(1, motion_energy / kappa)`.
    Heuristic { kappa: f64 },
    Sidecar(SidecarEndpoint),
}

impl DetectorKind {
    pub fn validate(&self) -> Result<(), DetectorError> {
        match self {
            Self::Oracle { tpr, fpr, .. } => {
                if !(0.0..=1.0).contains(tpr) || !(0.0..=1.0).contains(fpr) {
                    return Err(DetectorError::Precondition("tpr and fpr must lie in [0, 1]".into()));
                }
            }
            Self::Heuristic { kappa } => {
                if !(*kappa > 0.0 && kappa.is_finite()) {
                    return Err(DetectorError::Precondition("kappa must be positive".into()));
                }
            }
            Self::Sidecar(SidecarEndpoint::Command(argv)) if argv.is_empty() => {
                return Err(DetectorError::Precondition("sidecar command is empty".into()));
            }
            Self::Sidecar(_) => {}
        }
        Ok(())
    }

    pub fn needs_frames(&self) -> bool {
        !matches!(self, Self::Oracle { .. })
    }

    /// Instantiates a detector. Sidecars connect (and handshake) here.
    pub fn build(&self) -> Result<Box<dyn Detector>, DetectorError> {
        self.validate()?;
        Ok(match self {
            Self::Oracle { tpr, fpr, seed } => Box::new(OracleDetector {
                tpr: *tpr,
                fpr: *fpr,
                seed: *seed,
            }),
            Self::Heuristic { kappa } => Box::new(HeuristicDetector { kappa: *kappa }),
            Self::Sidecar(endpoint) => Box::new(SidecarDetector {
                client: SidecarClient::connect(endpoint, sidecar::DEFAULT_TIMEOUT)?,
            }),
        })
    }
}

/// What a detector sees for one service.
#[derive(Debug, Clone, Copy)]
pub struct DetectInput<'a> {
    pub stream: &'a StreamId,
    pub cycle: u64,
    pub diffs: Option<&'a DiffWindow>,
    /// Ground truth; only the oracle reads it.
    pub truth: Option<bool>,
}

pub trait Detector: Send {
    fn scores(&mut self, input: &DetectInput<'_>) -> Result<ScoreVector, DetectorError>;
}

/// Runs a detector and applies the decision threshold.
pub fn detect(
    detector: &mut dyn Detector,
    input: &DetectInput<'_>,
    threshold: f64,
) -> Result<DetectionResult, DetectorError> {
    let scores = detector.scores(input)?;
    Ok(DetectionResult::decide(
        input.stream.clone(),
        input.cycle,
        scores,
        threshold,
        Source::Video,
    ))
}

#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub tpr: f64,
    pub fpr: f64,
    pub seed: u64,
}

impl Detector for OracleDetector {
    fn scores(&mut self, input: &DetectInput<'_>) -> Result<ScoreVector, DetectorError> {
        let truth = input
            .truth
            .ok_or_else(|| DetectorError::Precondition("oracle detector needs ground truth".into()))?;
        let rate = if truth { self.tpr } else { self.fpr };
        let u = draw_unit(self.seed, stream_key(input.stream), input.cycle, Salt::Oracle);
        let score = if u < rate { ORACLE_HIT } else { ORACLE_MISS };
        Ok(ScoreVector::single(score).expect("constant in range"))
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicDetector {
    pub kappa: f64,
}

impl HeuristicDetector {
    pub fn score(&self, energy: f64) -> f64 {
        (energy / self.kappa).min(1.0)
    }
}

impl Detector for HeuristicDetector {
    fn scores(&mut self, input: &DetectInput<'_>) -> Result<ScoreVector, DetectorError> {
        let dw = input
            .diffs
            .ok_or_else(|| DetectorError::Precondition("heuristic detector needs a diff window".into()))?;
        Ok(ScoreVector::single(self.score(motion_energy(dw))).expect("energy is in [0, 1]"))
    }
}

pub struct SidecarDetector {
    client: SidecarClient,
}

impl SidecarDetector {
    pub fn new(client: SidecarClient) -> Self {
        Self { client }
    }

    pub fn with_timeout(endpoint: &SidecarEndpoint, timeout: Duration) -> Result<Self, DetectorError> {
        Ok(Self::new(SidecarClient::connect(endpoint, timeout)?))
    }
}

impl Detector for SidecarDetector {
    fn scores(&mut self, input: &DetectInput<'_>) -> Result<ScoreVector, DetectorError> {
        let dw = input
            .diffs
            .ok_or_else(|| DetectorError::Precondition("sidecar detector needs a diff window".into()))?;
        self.client.infer(input.stream, dw)
    }
}
