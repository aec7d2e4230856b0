use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use streamwatch_core::detector::DetectorKind;
use streamwatch_core::sim::{
    bench_tau, gen_timeline, run_sim, Event, NullSink, Policy, SimError, SimOptions, SyntheticSpec, TraceConfig,
};
use streamwatch_core::{EventTimeline, Interval, SchedulerConfig, StreamId};

fn ids(n: usize) -> Vec<StreamId> {
    (0..n).map(|i| StreamId::new(format!("s{i:02}")).unwrap()).collect()
}

fn opts(cycles: u64, seed: u64) -> SimOptions {
    SimOptions {
        cycles,
        seed,
        frames: SyntheticSpec::default(),
    }
}

fn perfect() -> DetectorKind {
    DetectorKind::Oracle {
        tpr: 1.0,
        fpr: 0.0,
        seed: 0,
    }
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; `UPDATE_GOLDENS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if env::var_os("UPDATE_GOLDENS").is_some() || !path.exists() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "golden {name} differs; rerun with UPDATE_GOLDENS=1 if intended");
}

fn render(tl: &EventTimeline) -> String {
    let mut out = String::from("stream,start,end\n");
    for (id, ivs) in tl.iter() {
        for iv in ivs {
            let _ = writeln!(out, "{id},{},{}", iv.start, iv.end);
        }
    }
    out
}

#[test]
fn timeline_golden_seed_42() {
    let tl = gen_timeline(&TraceConfig::new(42, 2000, 0.01, 40.0), &ids(4)).unwrap();
    let again = gen_timeline(&TraceConfig::new(42, 2000, 0.01, 40.0), &ids(4)).unwrap();
    assert_eq!(tl, again);
    for (_, ivs) in tl.iter() {
        for w in ivs.windows(2) {
            assert!(w[0].end < w[1].start, "intervals must be disjoint and separated");
        }
        assert!(ivs.iter().all(|iv| iv.start < iv.end && iv.end <= 2000));
    }
    check_golden("timeline_seed42.csv", &render(&tl));
}

#[test]
fn vanishing_start_rate_gives_no_events() {
    let tl = gen_timeline(&TraceConfig::new(1, 1000, 1e-12, 40.0), &ids(8)).unwrap();
    assert_eq!(tl.event_count(), 0);
}

#[test]
fn compute_all_with_perfect_oracle_detects_instantly() {
    let tl = gen_timeline(&TraceConfig::new(3, 3000, 0.01, 20.0), &ids(6)).unwrap();
    assert!(tl.event_count() > 10);
    let mut log = Vec::new();
    let m = run_sim(&tl, &SchedulerConfig::new(6, 2).unwrap(), Policy::ComputeAll, &perfect(), &opts(3000, 3), &mut log).unwrap();
    assert_eq!(m.events_total, tl.event_count() as u64);
    assert_eq!(m.events_missed, 0);
    assert_eq!(m.mean_ttd, 0.0);
    assert_eq!(m.p95_ttd, 0.0);
    assert_eq!(m.b, 6);
    assert_eq!(m.services_total, 6 * 3000);
    assert!(log.iter().all(|e| !matches!(e, Event::Alert { ttd, .. } if *ttd != 0)));
}

#[test]
fn round_robin_misses_off_rotation_blip() {
    let s = ids(2);
    let cfg = SchedulerConfig::new(2, 1).unwrap();
    let blip_on = |k: usize| {
        let mut v = vec![(s[0].clone(), vec![]), (s[1].clone(), vec![])];
        v[k].1.push(Interval { start: 1, end: 2 });
        EventTimeline::new(v).unwrap()
    };
    let mut log = Vec::new();
    let m = run_sim(&blip_on(0), &cfg, Policy::RoundRobin, &perfect(), &opts(10, 0), &mut log).unwrap();
    let served: Vec<(u64, String)> = log
        .iter()
        .filter_map(|e| match e {
            Event::Service { cycle, stream, .. } => Some((*cycle, stream.to_string())),
            _ => None,
        })
        .collect();
    assert_eq!(served[..4], [(0, "s00".into()), (1, "s01".into()), (2, "s00".into()), (3, "s01".into())]);
    // s00 is idle on cycle 1 and the oracle sees no truth on cycle 2
    assert_eq!((m.events_total, m.events_missed), (1, 1));

    let m = run_sim(&blip_on(1), &cfg, Policy::RoundRobin, &perfect(), &opts(10, 0), &mut NullSink).unwrap();
    assert_eq!((m.events_total, m.events_missed, m.mean_ttd), (1, 0, 0.0));
}

#[test]
fn budget_fully_spent_and_wait_capped() {
    let tl = gen_timeline(&TraceConfig::new(11, 4000, 0.005, 30.0), &ids(12)).unwrap();
    let mut cfg = SchedulerConfig::new(12, 3).unwrap();
    cfg.w_max = Some(25);
    let det = DetectorKind::Oracle {
        tpr: 0.9,
        fpr: 0.05,
        seed: 11,
    };
    for policy in [Policy::Priority, Policy::RoundRobin] {
        let m = run_sim(&tl, &cfg, policy, &det, &opts(4000, 11), &mut NullSink).unwrap();
        assert_eq!(m.services_total, 3 * 4000);
        assert_eq!(m.events_detected + m.events_missed, m.events_total);
        assert!(m.max_wait <= 25 + 4, "{policy}: {}", m.max_wait);
    }
}

#[test]
fn perfect_compute_all_dominates() {
    let tl = gen_timeline(&TraceConfig::new(5, 5000, 0.004, 25.0), &ids(10)).unwrap();
    let cfg = SchedulerConfig::new(10, 3).unwrap();
    let o = opts(5000, 5);
    let best = run_sim(&tl, &cfg, Policy::ComputeAll, &perfect(), &o, &mut NullSink).unwrap();
    for policy in [Policy::Priority, Policy::RoundRobin] {
        let m = run_sim(&tl, &cfg, policy, &perfect(), &o, &mut NullSink).unwrap();
        assert!(best.events_detected >= m.events_detected);
        assert!(best.mean_ttd <= m.mean_ttd);
    }
}

#[test]
fn priority_updates_fall_between_events_with_clean_detector() {
    let tl = gen_timeline(&TraceConfig::new(8, 2000, 0.01, 10.0), &ids(4)).unwrap();
    let cfg = SchedulerConfig::new(4, 2).unwrap();
    let det = DetectorKind::Oracle {
        tpr: 0.9,
        fpr: 0.0,
        seed: 8,
    };
    let mut log = Vec::new();
    run_sim(&tl, &cfg, Policy::Priority, &det, &opts(2000, 8), &mut log).unwrap();
    let mut last: std::collections::BTreeMap<String, f64> = Default::default();
    let mut detected_now = std::collections::BTreeSet::new();
    for e in &log {
        match e {
            Event::Service { cycle, stream, detected, .. } => {
                if *detected {
                    detected_now.insert((*cycle, stream.to_string()));
                }
            }
            Event::Update { cycle, stream, p, .. } => {
                let key = stream.to_string();
                if let Some(prev) = last.get(&key) {
                    if detected_now.contains(&(*cycle, key.clone())) {
                        assert!(p >= prev);
                    } else {
                        assert!(p < prev || *p == cfg.p_floor, "{key} at {cycle}: {prev} -> {p}");
                    }
                }
                last.insert(key, *p);
            }
            _ => {}
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let tl = gen_timeline(&TraceConfig::new(21, 1500, 0.01, 15.0), &ids(8)).unwrap();
    let cfg = SchedulerConfig::new(8, 2).unwrap();
    let det = DetectorKind::Oracle {
        tpr: 0.8,
        fpr: 0.1,
        seed: 21,
    };
    let run = || {
        let mut log = Vec::new();
        let m = run_sim(&tl, &cfg, Policy::Priority, &det, &opts(1500, 21), &mut log).unwrap();
        (m, log)
    };
    assert_eq!(run(), run());
}

#[test]
fn heuristic_detector_runs_on_synthetic_frames() {
    let tl = gen_timeline(&TraceConfig::new(2, 300, 0.02, 10.0), &ids(3)).unwrap();
    let cfg = SchedulerConfig::new(3, 3).unwrap();
    let m = run_sim(&tl, &cfg, Policy::ComputeAll, &DetectorKind::Heuristic { kappa: 0.1 }, &opts(300, 2), &mut NullSink).unwrap();
    assert!(m.events_total > 0);
    assert_eq!(m.events_missed, 0);
    assert_eq!(m.mean_ttd, 0.0);
}

#[test]
fn stream_mismatch_rejected() {
    let tl = gen_timeline(&TraceConfig::new(1, 10, 0.1, 2.0), &ids(3)).unwrap();
    let err = run_sim(&tl, &SchedulerConfig::new(4, 1).unwrap(), Policy::Priority, &perfect(), &opts(10, 1), &mut NullSink).unwrap_err();
    assert!(matches!(err, SimError::StreamMismatch { config: 4, timeline: 3 }));
}

#[test]
fn tau_sweep_shape() {
    let tl = gen_timeline(&TraceConfig::new(4, 1000, 0.005, 20.0), &ids(8)).unwrap();
    let cfg = SchedulerConfig::new(8, 2).unwrap();
    let rows = bench_tau(&cfg, &[8, 1, 2, 1000, 4], &tl, &perfect(), &opts(1000, 4)).unwrap();
    let taus: Vec<u64> = rows.iter().map(|r| r.tau).collect();
    assert_eq!(taus, [1, 2, 4, 8, 1000]);
    for w in rows.windows(2) {
        assert!(w[1].maintenance_total < w[0].maintenance_total);
    }
    assert_eq!(rows[0].maintenance_total, 8.0 * 1000.0);
    assert_eq!(rows[4].maintenance_total, 8.0);
    for r in &rows {
        assert_eq!(r.end_to_end_delay, r.mean_ttd + r.maintenance_total / 1000.0);
    }
    assert!(matches!(bench_tau(&cfg, &[], &tl, &perfect(), &opts(10, 4)), Err(SimError::EmptyTauList)));
}
