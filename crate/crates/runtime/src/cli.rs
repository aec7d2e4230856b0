//! Command-line surface.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use streamwatch_core::audio::{extract_features, fuse_minmax, FeatureConfig};
use streamwatch_core::detector::{detect, DetectInput, Detector, HeuristicDetector, SidecarDetector, SidecarEndpoint};
use streamwatch_core::preprocess::{crop, crop_window, diff_window, remove_borders, transpose};
use streamwatch_core::sim::{bench_tau, Policy};
use streamwatch_core::{FrameWindow, StreamId};

use crate::config::{load_config, StreamSource};
use crate::events::{format_real, write_metrics, JsonlSink};
use crate::pgm::{list_frames, read_pgm, write_pgm};
use crate::pipeline::run_pipeline;
use crate::wav::read_wav;

#[derive(Debug, Parser)]
#[command(name = "streamwatch", version, about = "Budgeted violence detection over many video streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Priority,
    RoundRobin,
    ComputeAll,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Priority => Policy::Priority,
            PolicyArg::RoundRobin => Policy::RoundRobin,
            PolicyArg::ComputeAll => Policy::ComputeAll,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    Heuristic,
    Sidecar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured simulation through the pipeline.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's policy.
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        /// Overrides `sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Event log path.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overrides `pipeline.workers`.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Sweep the rebuild interval on one timeline.
    BenchTau {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crop borders and/or transpose a directory of PGM frames.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dark threshold for border removal.
        #[arg(long)]
        deborder: Option<u8>,
        #[arg(long)]
        transpose: bool,
    },
    /// Score consecutive windows of a PGM frame directory.
    Detect {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, value_enum)]
        detector: DetectorArg,
        /// Sidecar program and arguments, whitespace separated.
        #[arg(long)]
        sidecar_cmd: Option<String>,
        /// Sidecar `host:port`, instead of a command.
        #[arg(long, conflicts_with = "sidecar_cmd")]
        sidecar_tcp: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long, default_value_t = 20)]
        len: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        deborder: Option<u8>,
        #[arg(long, default_value_t = 1000)]
        timeout_ms: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-window audio features of a 16-bit mono WAV file.
    AudioFeatures {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        n_fft: usize,
        #[arg(long, default_value_t = 128)]
        hop: usize,
        #[arg(long, default_value_t = 26)]
        n_mels: usize,
        #[arg(long, default_value_t = 13)]
        n_mfcc: usize,
    },
    /// Fuse per-window video and audio scores (`score` column of each CSV).
    Fuse {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        audio: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        w_video: f64,
        #[arg(long, default_value_t = 1.0)]
        w_audio: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            policy,
            seed,
            out,
            log,
            workers,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(p) = policy {
                cfg.policy = p.into();
            }
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            if let Some(w) = workers {
                if w == 0 {
                    bail!("--workers must be at least 1");
                }
                cfg.pipeline.workers = w;
            }
            let events_path = log.unwrap_or_else(|| cfg.output.events.clone());
            let metrics_path = out.unwrap_or_else(|| cfg.output.metrics.clone());
            let mut sink = JsonlSink::new(create(&events_path)?);
            let metrics = run_pipeline(&cfg, &mut sink)?;
            sink.finish()
                .with_context(|| format!("writing {}", events_path.display()))?;
            write_metrics(create(&metrics_path)?, &[metrics.clone()])
                .with_context(|| format!("writing {}", metrics_path.display()))?;
            info!(
                "{}: {} of {} events detected, mean ttd {:.3}",
                metrics.policy, metrics.events_detected, metrics.events_total, metrics.mean_ttd
            );
            Ok(())
        }
        Command::BenchTau { config, taus, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            if cfg.streams.iter().any(|s| s.source != StreamSource::Synthetic) {
                bail!("bench-tau needs synthetic streams only");
            }
            let timeline = cfg.timeline()?;
            let rows = bench_tau(&cfg.scheduler_config(), &taus, &timeline, &cfg.detector_kind(), &cfg.sim_options())?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "tau,mean_ttd,maintenance_total,end_to_end_delay")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.tau,
                    format_real(r.mean_ttd),
                    format_real(r.maintenance_total),
                    format_real(r.end_to_end_delay)
                )?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Preprocess {
            input,
            out,
            deborder,
            transpose: flip,
        } => {
            let paths = list_frames(&input)?;
            if paths.is_empty() {
                bail!("no .pgm files in {}", input.display());
            }
            fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let rect = match deborder {
                Some(t) => Some(remove_borders(&read_pgm(&paths[0])?, t)),
                None => None,
            };
            for path in &paths {
                let mut frame = read_pgm(path)?;
                if let Some(r) = rect {
                    frame = crop(&frame, r).with_context(|| format!("cropping {}", path.display()))?;
                }
                if flip {
                    frame = transpose(&frame);
                }
                write_pgm(&out.join(path.file_name().expect("listed files have names")), &frame)?;
            }
            info!("wrote {} frames to {}", paths.len(), out.display());
            Ok(())
        }
        Command::Detect {
            frames,
            detector,
            sidecar_cmd,
            sidecar_tcp,
            kappa,
            len,
            threshold,
            deborder,
            timeout_ms,
            out,
        } => {
            if len == 0 {
                bail!("--len must be at least 1");
            }
            if !(threshold > 0.0 && threshold < 1.0) {
                bail!("--threshold must lie in (0, 1)");
            }
            let mut det: Box<dyn Detector> = match detector {
                DetectorArg::Heuristic => {
                    if !(kappa > 0.0 && kappa.is_finite()) {
                        bail!("--kappa must be positive");
                    }
                    Box::new(HeuristicDetector { kappa })
                }
                DetectorArg::Sidecar => {
                    let endpoint = match (sidecar_cmd, sidecar_tcp) {
                        (Some(cmd), _) => {
                            SidecarEndpoint::Command(cmd.split_whitespace().map(String::from).collect())
                        }
                        (None, Some(addr)) => SidecarEndpoint::Tcp(addr),
                        (None, None) => bail!("--detector sidecar needs --sidecar-cmd or --sidecar-tcp"),
                    };
                    Box::new(SidecarDetector::with_timeout(&endpoint, Duration::from_millis(timeout_ms))?)
                }
            };
            let paths = list_frames(&frames)?;
            let stream = StreamId::new(
                frames
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "frames".into()),
            )?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "window,first_frame,score,detected")?;
            let mut k = 0usize;
            while (k + 1) * len < paths.len() {
                let first = k * len;
                let window: Vec<_> = paths[first..=first + len]
                    .iter()
                    .zip(first as u64..)
                    .map(|(p, i)| read_pgm(p).map(|f| f.with_index(i)))
                    .collect::<Result<_, _>>()?;
                let mut fw = FrameWindow::with_len(stream.clone(), window, len)?;
                if let Some(t) = deborder {
                    fw = crop_window(&fw, remove_borders(&fw.frames()[0], t))?;
                }
                let diffs = diff_window(&fw);
                let input = DetectInput {
                    stream: &stream,
                    cycle: k as u64,
                    diffs: Some(&diffs),
                    truth: None,
                };
                let r = detect(det.as_mut(), &input, threshold)?;
                writeln!(w, "{k},{first},{},{}", format_real(r.scores.mean()), r.detected)?;
                k += 1;
            }
            w.flush()?;
            if k == 0 {
                bail!("{} holds fewer than {} frames", frames.display(), len + 1);
            }
            Ok(())
        }
        Command::AudioFeatures {
            wav,
            out,
            n_fft,
            hop,
            n_mels,
            n_mfcc,
        } => {
            let clip = read_wav(&wav)?;
            let rows = extract_features(
                &clip,
                &FeatureConfig {
                    n_fft,
                    hop,
                    n_mels,
                    n_mfcc,
                },
            )?;
            let mut header = vec!["window".to_string(), "zcr".into(), "energy".into(), "loudness".into()];
            header.extend((0..n_mfcc).map(|i| format!("mfcc_{i}")));
            header.extend((0..12).map(|i| format!("chroma_{i}")));
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(&header)?;
            for (i, row) in rows.iter().enumerate() {
                let mut rec = vec![i.to_string(), format_real(row.zcr), format_real(row.energy), format_real(row.loudness_db)];
                rec.extend(row.mfcc.iter().chain(row.chroma.iter()).map(|v| format_real(*v)));
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Fuse {
            video,
            audio,
            w_video,
            w_audio,
            out,
        } => {
            let v = read_scores(&video)?;
            let a = read_scores(&audio)?;
            if v.len() != a.len() {
                bail!("{} has {} rows but {} has {}", video.display(), v.len(), audio.display(), a.len());
            }
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(["window", "video", "audio", "fused"])?;
            for (i, (vs, as_)) in v.iter().zip(&a).enumerate() {
                let fused = fuse_minmax(*vs, *as_, w_video, w_audio)
                    .with_context(|| format!("row {i}"))?;
                w.write_record([i.to_string(), format_real(*vs), format_real(*as_), format_real(fused)])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

/// The `score` column of a CSV file.
fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let col = reader
        .headers()?
        .iter()
        .position(|h| h == "score")
        .with_context(|| format!("{} has no score column", path.display()))?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = rec.get(col).unwrap_or("");
            field
                .trim()
                .parse::<f64>()
                .with_context(|| format!("{} row {}: bad score {field:?}", path.display(), i + 1))
        })
        .collect()
}
