//! Run configuration: JSON, unknown fields rejected, defaults filled.
//!
//! ```json
//! {
//!   "streams": [{"id": "s00", "source": "synthetic"},
//!               {"id": "door", "source": "frames:clips/door"}],
//!   "budget": 8,
//!   "tau": 1, "p_floor": 0.0, "alpha": 0.01, "w_max": 200,
//!   "threshold": 0.5, "queue_cost": 1.0, "policy": "priority",
//!   "window": {"len": 20, "fps": 25.0, "width": 16, "height": 16,
//!              "noise": 1, "background_max": 200, "deborder": null},
//!   "detector": {"kind": "oracle", "tpr": 0.95, "fpr": 0.02},
//!   "sim": {"seed": 7, "cycles": 20000, "p_start": 0.0025,
//!           "mean_burst": 40.0, "hotness": {"s00": 2.0}},
//!   "pipeline": {"workers": 4, "queue_depth": null, "drop_oldest": false},
//!   "output": {"events": "events.jsonl", "metrics": "metrics.csv"}
//! }
//! ```
//!
//! `w_max: null` disables the starvation cap. Relative `frames:` directories
//! resolve against the config file's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};
use streamwatch_core::detector::{DetectorKind, SidecarEndpoint};
use streamwatch_core::sim::{gen_timeline, Policy, SimOptions, SyntheticSpec, TraceConfig};
use streamwatch_core::{EventTimeline, SchedulerConfig, StreamId, DEFAULT_WINDOW_LEN};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("duplicate stream id {0:?}")]
    DuplicateId(String),
    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamSource {
    Synthetic,
    Frames(PathBuf),
}

impl<'de> Deserialize<'de> for StreamSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.strip_prefix("frames:") {
            _ if s == "synthetic" => Ok(Self::Synthetic),
            Some(dir) if !dir.is_empty() => Ok(Self::Frames(PathBuf::from(dir))),
            _ => Err(serde::de::Error::custom(format!(
                "source must be \"synthetic\" or \"frames:<dir>\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub id: StreamId,
    pub source: StreamSource,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    /// Differences per window.
    pub len: usize,
    /// Frame rate; one cycle lasts `len / fps` seconds.
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub noise: u8,
    pub background_max: u8,
    /// Dark threshold for border removal on `frames:` sources.
    pub deborder: Option<u8>,
}

impl Default for WindowSpec {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self {
            len: DEFAULT_WINDOW_LEN,
            fps: 25.0,
            width: s.width,
            height: s.height,
            noise: s.noise,
            background_max: s.background_max,
            deborder: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorSpec {
    Oracle {
        #[serde(default = "one")]
        tpr: f64,
        #[serde(default)]
        fpr: f64,
        /// Defaults to `sim.seed`.
        #[serde(default)]
        seed: Option<u64>,
    },
    Heuristic {
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    Sidecar {
        #[serde(default)]
        cmd: Option<Vec<String>>,
        #[serde(default)]
        tcp: Option<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self::Heuristic { kappa: default_kappa() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub seed: u64,
    pub cycles: u64,
    pub p_start: f64,
    pub mean_burst: f64,
    pub hotness: BTreeMap<String, f64>,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            cycles: 1000,
            p_start: 0.0025,
            mean_burst: 40.0,
            hotness: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSpec {
    /// Size of each of the preprocess and detect pools.
    pub workers: usize,
    /// Capacity of every inter-stage queue; `2 * budget` when absent.
    pub queue_depth: Option<usize>,
    /// Reserved; must stay false.
    pub drop_oldest: bool,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self {
            workers: 1,
            queue_depth: None,
            drop_oldest: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub events: PathBuf,
    pub metrics: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            events: "events.jsonl".into(),
            metrics: "metrics.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub streams: Vec<StreamSpec>,
    pub budget: usize,
    #[serde(default = "default_tau")]
    pub tau: u64,
    #[serde(default)]
    pub p_floor: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_w_max")]
    pub w_max: Option<u64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "one")]
    pub queue_cost: f64,
    #[serde(default = "default_policy", deserialize_with = "de_policy")]
    pub policy: Policy,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub pipeline: PipelineSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    0.1
}
fn default_timeout_ms() -> u64 {
    1000
}
fn default_tau() -> u64 {
    1
}
fn default_alpha() -> f64 {
    0.01
}
fn default_w_max() -> Option<u64> {
    Some(200)
}
fn default_threshold() -> f64 {
    0.5
}
fn default_policy() -> Policy {
    Policy::Priority
}

fn de_policy<'de, D: Deserializer<'de>>(d: D) -> Result<Policy, D::Error> {
    String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_config(&text, base)
}

/// Parses config text; relative frame directories are joined onto `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => ConfigError::Schema(e.to_string()),
            _ => ConfigError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    for s in &mut cfg.streams {
        if let StreamSource::Frames(dir) = &mut s.source {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bounds(ok: bool, what: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Bounds(what.to_string()))
    }
}

impl RunConfig {
    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn stream_ids(&self) -> Vec<StreamId> {
        self.streams.iter().map(|s| s.id.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.streams.is_empty() {
            return Err(ConfigError::Schema("at least one stream is required".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.streams {
            if !seen.insert(s.id.as_str()) {
                return Err(ConfigError::DuplicateId(s.id.to_string()));
            }
        }
        let n = self.n_streams();
        if self.budget > n {
            return Err(ConfigError::Schema(format!("budget {} exceeds stream count {n}", self.budget)));
        }
        for key in self.sim.hotness.keys() {
            if !seen.contains(key.as_str()) {
                return Err(ConfigError::Schema(format!("hotness names unknown stream {key:?}")));
            }
        }
        bounds(self.budget >= 1, "budget must be at least 1")?;
        bounds(self.tau >= 1, "tau must be at least 1")?;
        bounds((0.0..1.0).contains(&self.p_floor), "p_floor must lie in [0, 1)")?;
        bounds(self.alpha >= 0.0 && self.alpha.is_finite(), "alpha must be finite and >= 0")?;
        bounds(self.w_max != Some(0), "w_max must be at least 1")?;
        bounds(self.threshold > 0.0 && self.threshold < 1.0, "threshold must lie in (0, 1)")?;
        bounds(self.queue_cost >= 0.0 && self.queue_cost.is_finite(), "queue_cost must be >= 0")?;

        let w = &self.window;
        bounds(w.len >= 1, "window.len must be at least 1")?;
        bounds(w.fps > 0.0 && w.fps.is_finite(), "window.fps must be positive")?;
        bounds(w.width >= 8 && w.height >= 8, "window.width and window.height must be at least 8")?;

        let sim = &self.sim;
        bounds(sim.p_start > 0.0 && sim.p_start <= 1.0, "sim.p_start must lie in (0, 1]")?;
        bounds(sim.mean_burst >= 1.0 && sim.mean_burst.is_finite(), "sim.mean_burst must be >= 1")?;
        bounds(
            sim.hotness.values().all(|h| *h >= 0.0 && h.is_finite()),
            "sim.hotness values must be finite and >= 0",
        )?;

        bounds(self.pipeline.workers >= 1, "pipeline.workers must be at least 1")?;
        bounds(self.pipeline.queue_depth != Some(0), "pipeline.queue_depth must be at least 1")?;
        if self.pipeline.drop_oldest {
            return Err(ConfigError::Schema("pipeline.drop_oldest is reserved and must be false".into()));
        }

        match &self.detector {
            DetectorSpec::Oracle { tpr, fpr, .. } => {
                bounds((0.0..=1.0).contains(tpr), "detector.tpr must lie in [0, 1]")?;
                bounds((0.0..=1.0).contains(fpr), "detector.fpr must lie in [0, 1]")?;
                if self.streams.iter().any(|s| s.source != StreamSource::Synthetic) {
                    return Err(ConfigError::Schema(
                        "the oracle detector needs ground truth, which frames: sources lack".into(),
                    ));
                }
            }
            DetectorSpec::Heuristic { kappa } => {
                bounds(*kappa > 0.0 && kappa.is_finite(), "detector.kappa must be positive")?;
            }
            DetectorSpec::Sidecar { cmd, tcp, timeout_ms } => {
                match (cmd, tcp) {
                    (Some(c), None) if !c.is_empty() => {}
                    (None, Some(_)) => {}
                    _ => {
                        return Err(ConfigError::Schema(
                            "sidecar detector needs exactly one of a non-empty cmd or tcp".into(),
                        ))
                    }
                }
                bounds(*timeout_ms >= 1, "detector.timeout_ms must be at least 1")?;
            }
        }

        for s in &self.streams {
            if let StreamSource::Frames(dir) = &s.source {
                if !dir.is_dir() {
                    return Err(ConfigError::MissingPath(dir.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn scheduler_config(&self) -> SchedulerConfig<f64> {
        SchedulerConfig {
            n_streams: self.n_streams(),
            budget: self.budget,
            tau: self.tau,
            p_floor: self.p_floor,
            aging_alpha: self.alpha,
            w_max: self.w_max,
            threshold: self.threshold,
            queue_cost: self.queue_cost,
        }
    }

    pub fn detector_kind(&self) -> DetectorKind {
        match &self.detector {
            DetectorSpec::Oracle { tpr, fpr, seed } => DetectorKind::Oracle {
                tpr: *tpr,
                fpr: *fpr,
                seed: seed.unwrap_or(self.sim.seed),
            },
            DetectorSpec::Heuristic { kappa } => DetectorKind::Heuristic { kappa: *kappa },
            DetectorSpec::Sidecar { cmd, tcp, .. } => DetectorKind::Sidecar(match (cmd, tcp) {
                (Some(argv), _) => SidecarEndpoint::Command(argv.clone()),
                (None, Some(addr)) => SidecarEndpoint::Tcp(addr.clone()),
                (None, None) => SidecarEndpoint::Command(Vec::new()),
            }),
        }
    }

    pub fn sidecar_timeout_ms(&self) -> u64 {
        match self.detector {
            DetectorSpec::Sidecar { timeout_ms, .. } => timeout_ms,
            _ => default_timeout_ms(),
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            width: self.window.width,
            height: self.window.height,
            len: self.window.len,
            noise: self.window.noise,
            background_max: self.window.background_max,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            cycles: self.sim.cycles,
            seed: self.sim.seed,
            frames: self.synthetic_spec(),
        }
    }

    pub fn trace_config(&self) -> TraceConfig {
        let mut tc = TraceConfig::new(self.sim.seed, self.sim.cycles, self.sim.p_start, self.sim.mean_burst);
        tc.hotness = self
            .sim
            .hotness
            .iter()
            .filter_map(|(k, v)| StreamId::new(k.as_str()).ok().map(|id| (id, *v)))
            .collect();
        tc
    }

    /// Ground-truth timeline; `frames:` streams carry no events.
    pub fn timeline(&self) -> Result<EventTimeline, ConfigError> {
        let ids = self.stream_ids();
        let generated = gen_timeline(&self.trace_config(), &ids).map_err(|e| ConfigError::Bounds(e.to_string()))?;
        let entries = self
            .streams
            .iter()
            .map(|s| {
                let intervals = match s.source {
                    StreamSource::Synthetic => generated.intervals(&s.id).to_vec(),
                    StreamSource::Frames(_) => Vec::new(),
                };
                (s.id.clone(), intervals)
            })
            .collect();
        EventTimeline::new(entries).map_err(|e| ConfigError::Schema(e.to_string()))
    }

    pub fn queue_depth(&self) -> usize {
        self.pipeline.queue_depth.unwrap_or(2 * self.budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(r#"{"streams":[{"id":"s1","source":"synthetic"}],"budget":1}"#).unwrap();
        assert_eq!(cfg.n_streams(), 1);
        assert_eq!(cfg.window.len, 20);
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(cfg.p_floor, 0.0);
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.w_max, Some(200));
        assert_eq!(cfg.tau, 1);
        assert_eq!(cfg.policy, Policy::Priority);
        assert_eq!(cfg.queue_depth(), 2);
    }

    #[test]
    fn null_w_max_disables_cap() {
        let cfg = parse(r#"{"streams":[{"id":"s1","source":"synthetic"}],"budget":1,"w_max":null}"#).unwrap();
        assert_eq!(cfg.w_max, None);
    }

    #[test]
    fn budget_above_n_is_schema_error() {
        let err = parse(r#"{"streams":[{"id":"s1","source":"synthetic"}],"budget":2}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema(_)), "{err}");
    }

    #[test]
    fn duplicate_id_is_distinct() {
        let err = parse(
            r#"{"streams":[{"id":"a","source":"synthetic"},{"id":"a","source":"synthetic"}],"budget":1}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateId(ref id) if id == "a"));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("{\n  \"streams\": [,]\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (2, 15)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_fields_rejected_everywhere() {
        for text in [
            r#"{"streams":[{"id":"s","source":"synthetic"}],"budget":1,"budjet":1}"#,
            r#"{"streams":[{"id":"s","source":"synthetic","x":1}],"budget":1}"#,
            r#"{"streams":[{"id":"s","source":"synthetic"}],"budget":1,"window":{"lenght":3}}"#,
            r#"{"streams":[{"id":"s","source":"synthetic"}],"budget":1,"detector":{"kind":"oracle","tpt":1}}"#,
        ] {
            assert!(matches!(parse(text), Err(ConfigError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn bounds_violations() {
        for extra in [
            r#""tau":0"#,
            r#""threshold":1.0"#,
            r#""p_floor":1.0"#,
            r#""alpha":-1"#,
            r#""sim":{"p_start":0}"#,
            r#""window":{"len":0}"#,
            r#""detector":{"kind":"heuristic","kappa":0}"#,
        ] {
            let text = format!(r#"{{"streams":[{{"id":"s","source":"synthetic"}}],"budget":1,{extra}}}"#);
            assert!(matches!(parse(&text), Err(ConfigError::Bounds(_))), "{extra}");
        }
    }

    #[test]
    fn missing_frames_dir() {
        let err = parse(r#"{"streams":[{"id":"s","source":"frames:/no/such/dir"}],"budget":1}"#).unwrap_err();
        assert!(matches!(err, ConfigError::MissingPath(_)));
    }

    #[test]
    fn oracle_with_frames_source_rejected() {
        let dir = std::env::temp_dir();
        let text = format!(
            r#"{{"streams":[{{"id":"s","source":"frames:{}"}}],"budget":1,"detector":{{"kind":"oracle"}}}}"#,
            dir.display()
        );
        assert!(matches!(parse(&text), Err(ConfigError::Schema(_))));
    }

    #[test]
    fn drop_oldest_is_reserved() {
        let text = r#"{"streams":[{"id":"s","source":"synthetic"}],"budget":1,"pipeline":{"drop_oldest":true}}"#;
        assert!(matches!(parse(text), Err(ConfigError::Schema(_))));
    }

    #[test]
    fn oracle_seed_defaults_to_sim_seed() {
        let text = r#"{"streams":[{"id":"s","source":"synthetic"}],"budget":1,
                       "detector":{"kind":"oracle","tpr":0.9},"sim":{"seed":11}}"#;
        let cfg = parse(text).unwrap();
        assert_eq!(
            cfg.detector_kind(),
            DetectorKind::Oracle {
                tpr: 0.9,
                fpr: 0.0,
                seed: 11
            }
        );
    }
}
