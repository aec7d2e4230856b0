use std::collections::BTreeMap;

use crate::error::TypeError;
use crate::rng::{draw_unit, stream_key, Salt};
use crate::types::{EventTimeline, Interval, StreamId};

/// Parameters of the synthetic ground-truth trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub seed: u64,
    pub cycles: u64,
    /// Per-cycle chance a quiet stream turns violent.
    pub p_start: f64,
    /// Mean violent burst length in cycles.
    pub mean_burst: f64,
    /// Per-stream multipliers on `p_start`; absent streams use 1.
    pub hotness: BTreeMap<StreamId, f64>,
}

impl TraceConfig {
    pub fn new(seed: u64, cycles: u64, p_start: f64, mean_burst: f64) -> Self {
        Self {
            seed,
            cycles,
            p_start,
            mean_burst,
            hotness: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        if !(self.p_start > 0.0 && self.p_start <= 1.0) {
            return Err(TypeError::BadTimeline("p_start must be in (0, 1]".into()));
        }
        if !(self.mean_burst >= 1.0 && self.mean_burst.is_finite()) {
            return Err(TypeError::BadTimeline("mean_burst must be >= 1".into()));
        }
        if self.hotness.values().any(|h| !(*h >= 0.0 && h.is_finite())) {
            return Err(TypeError::BadTimeline("hotness multipliers must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Two-state Markov chain per stream, one keyed draw per cycle: a quiet
/// stream turns violent with probability `p_start * hotness` (capped at 1),
/// a violent one turns quiet with probability `1 / mean_burst`.
pub fn gen_timeline(tc: &TraceConfig, streams: &[StreamId]) -> Result<EventTimeline, TypeError> {
    tc.validate()?;
    let p_end = 1.0 / tc.mean_burst;
    let per_stream = streams
        .iter()
        .map(|id| {
            let key = stream_key(id);
            let p_start = (tc.p_start * tc.hotness.get(id).copied().unwrap_or(1.0)).min(1.0);
            let mut intervals = Vec::new();
            let mut started: Option<u64> = None;
            for t in 0..tc.cycles {
                let u = draw_unit(tc.seed, key, t, Salt::Timeline);
                match started {
                    None if u < p_start => started = Some(t),
                    Some(start) if u < p_end => {
                        intervals.push(Interval { start, end: t });
                        started = None;
                    }
                    _ => {}
                }
            }
            if let Some(start) = started {
                intervals.push(Interval { start, end: tc.cycles });
            }
            (id.clone(), intervals)
        })
        .collect();
    EventTimeline::new(per_stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<StreamId> {
        (0..n).map(|i| StreamId::new(format!("s{i}")).unwrap()).collect()
    }

    #[test]
    fn vanishing_rate_gives_no_events() {
        let t = gen_timeline(&TraceConfig::new(1, 1000, 1e-12, 40.0), &ids(8)).unwrap();
        assert_eq!(t.event_count(), 0);
    }

    #[test]
    fn certain_start_is_violent_from_cycle_zero() {
        let tc = TraceConfig::new(3, 500, 1.0, 500.0);
        let t = gen_timeline(&tc, &ids(4)).unwrap();
        for (_, iv) in t.iter() {
            assert_eq!(iv[0].start, 0);
            // an ending burst restarts on the very next cycle
            assert!(iv.windows(2).all(|w| w[1].start == w[0].end + 1));
            assert_eq!(iv.last().unwrap().end, 500);
        }
    }

    #[test]
    fn hotness_scales_event_rate() {
        let streams = ids(2);
        let mut tc = TraceConfig::new(5, 50_000, 0.002, 10.0);
        tc.hotness.insert(streams[1].clone(), 5.0);
        let t = gen_timeline(&tc, &streams).unwrap();
        let cold = t.intervals(&streams[0]).len() as f64;
        let hot = t.intervals(&streams[1]).len() as f64;
        assert!(hot > 3.0 * cold, "hot {hot} cold {cold}");
    }

    #[test]
    fn adding_streams_keeps_existing_timelines() {
        let tc = TraceConfig::new(11, 3000, 0.01, 20.0);
        let small = gen_timeline(&tc, &ids(2)).unwrap();
        let large = gen_timeline(&tc, &ids(6)).unwrap();
        for id in ids(2) {
            assert_eq!(small.intervals(&id), large.intervals(&id));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(gen_timeline(&TraceConfig::new(0, 10, 0.0, 2.0), &ids(1)).is_err());
        assert!(gen_timeline(&TraceConfig::new(0, 10, 0.1, 0.5), &ids(1)).is_err());
    }
}
