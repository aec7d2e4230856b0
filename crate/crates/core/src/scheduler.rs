//! Probability-driven stream scheduling.
//!
//! Each stream carries a priority `p` and a confidence `c`. After a stream is
//! serviced its priority moves by `±exp(-c / N)` (up on detection, down
//! otherwise) and is clamped to `[p_floor, 1]`; the confidence then becomes
//! `|c - sum(scores)|`. Every cycle the `B` highest-ranked streams are
//! serviced.
//!
//! The queue order (by `p + alpha * wait`) is rebuilt only every `tau`
//! cycles; in between, selection walks the stale order. Streams whose wait
//! reached `w_max` preempt the order. With `alpha = 0` and no `w_max` the
//! order is the bare priority queue: ties fall to the stream id alone, so
//! quiet streams can starve.

use std::cmp::Ordering;

use thiserror::Error;

use crate::error::TypeError;
use crate::scalar::Real;
use crate::types::{DetectionResult, SchedulerConfig, ScoreVector, StreamId, StreamState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Config(#[from] TypeError),
    #[error("expected {expected} streams, got {actual}")]
    StreamCount { expected: usize, actual: usize },
    #[error("duplicate stream id {0}")]
    DuplicateStream(StreamId),
    #[error("result for stream {0} which was not selected this cycle")]
    NotSelected(StreamId),
    #[error("more than one result for stream {0}")]
    DuplicateResult(StreamId),
}

/// `|c - sum(scores)|`.
pub fn update_confidence<T: Real>(c: T, scores: &ScoreVector<T>) -> T {
    (c - scores.sum()).abs()
}

/// `clamp(p ± exp(-c / N), p_floor, 1)`, plus on detection, minus otherwise.
pub fn update_priority<T: Real>(p: T, detected: bool, c: T, config: &SchedulerConfig<T>) -> T {
    let step = (-c / T::from_count(config.n_streams)).exp();
    let moved = if detected { p + step } else { p - step };
    moved.max(config.p_floor).min(T::one())
}

/// Amortized per-cycle cost of rebuilding an `n`-entry queue every `tau` cycles.
pub fn maintenance_cost<T: Real>(n: usize, tau: u64, per_entry: T) -> T {
    per_entry * T::from_count(n) / T::from_u64(tau).expect("tau representable")
}

/// New `(p, c)` of a stream after a service.
#[derive(Debug, Clone, PartialEq)]
pub struct StateUpdate<T: Real = f64> {
    pub stream: StreamId,
    pub p: T,
    pub c: T,
}

#[derive(Debug, Clone)]
pub struct PriorityTable<T: Real = f64> {
    states: Vec<StreamState<T>>,
    /// Queue order as of the last rebuild.
    order: Vec<usize>,
    config: SchedulerConfig<T>,
    cycle: u64,
    rebuilds: u64,
    pending: Vec<usize>,
}

impl<T: Real> PriorityTable<T> {
    /// Every stream starts at `p = 1/N`, `c = 0`, never serviced.
    pub fn new(streams: Vec<StreamId>, config: SchedulerConfig<T>) -> Result<Self, SchedulerError> {
        config.validate()?;
        if streams.len() != config.n_streams {
            return Err(SchedulerError::StreamCount {
                expected: config.n_streams,
                actual: streams.len(),
            });
        }
        let mut streams = streams;
        streams.sort();
        if let Some(dup) = streams.windows(2).find(|w| w[0] == w[1]) {
            return Err(SchedulerError::DuplicateStream(dup[0].clone()));
        }
        let p0 = T::one() / T::from_count(config.n_streams);
        let states: Vec<_> = streams
            .into_iter()
            .map(|stream| StreamState {
                stream,
                p: p0,
                c: T::zero(),
                last_serviced: None,
                wait: 0,
            })
            .collect();
        Ok(Self {
            order: (0..states.len()).collect(),
            states,
            config,
            cycle: 0,
            rebuilds: 0,
            pending: Vec::new(),
        })
    }

    pub fn config(&self) -> &SchedulerConfig<T> {
        &self.config
    }

    /// States in stream-id order.
    pub fn states(&self) -> &[StreamState<T>] {
        &self.states
    }

    pub fn state(&self, id: &StreamId) -> Option<&StreamState<T>> {
        self.index_of(id).map(|i| &self.states[i])
    }

    /// Direct access for seeding experiments; the order sees the change at the next rebuild.
    pub fn state_mut(&mut self, id: &StreamId) -> Option<&mut StreamState<T>> {
        self.index_of(id).map(move |i| &mut self.states[i])
    }

    /// Next cycle to be scheduled.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Queue rebuilds performed so far.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn max_wait(&self) -> u64 {
        self.states.iter().map(|s| s.wait).max().unwrap_or(0)
    }

    fn index_of(&self, id: &StreamId) -> Option<usize> {
        self.states.binary_search_by(|s| s.stream.cmp(id)).ok()
    }

    fn rank_key(&self, i: usize) -> T {
        self.states[i].p + self.config.aging_alpha * T::from_u64(self.states[i].wait).expect("wait representable")
    }

    fn rank_order(&self, a: usize, b: usize) -> Ordering {
        let (sa, sb) = (&self.states[a], &self.states[b]);
        let by_score = self
            .rank_key(b)
            .partial_cmp(&self.rank_key(a))
            .unwrap_or(Ordering::Equal);
        let by_wait = if self.config.aging_enabled() {
            sb.wait.cmp(&sa.wait)
        } else {
            Ordering::Equal
        };
        by_score.then(by_wait).then_with(|| sa.stream.cmp(&sb.stream))
    }

    /// Picks this cycle's `min(B, N)` streams, updates wait counters and
    /// advances the cycle. Results for exactly these streams may then be
    /// passed to [`PriorityTable::apply_cycle_results`].
    pub fn select_streams(&mut self) -> Vec<StreamId> {
        if self.cycle % self.config.tau == 0 {
            let mut order: Vec<usize> = (0..self.states.len()).collect();
            order.sort_by(|&a, &b| self.rank_order(a, b));
            self.order = order;
            self.rebuilds += 1;
        }
        let budget = self.config.budget.min(self.states.len());
        let mut overdue: Vec<usize> = match self.config.w_max {
            Some(cap) => (0..self.states.len()).filter(|&i| self.states[i].wait >= cap).collect(),
            None => Vec::new(),
        };
        overdue.sort_by(|&a, &b| {
            let (sa, sb) = (&self.states[a], &self.states[b]);
            sb.wait.cmp(&sa.wait).then_with(|| sa.stream.cmp(&sb.stream))
        });
        overdue.truncate(budget);

        let mut chosen = overdue;
        for &i in &self.order {
            if chosen.len() == budget {
                break;
            }
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
        let mut picked = vec![false; self.states.len()];
        for &i in &chosen {
            picked[i] = true;
        }
        for (i, s) in self.states.iter_mut().enumerate() {
            if picked[i] {
                s.wait = 0;
                s.last_serviced = Some(self.cycle);
            } else {
                s.wait += 1;
            }
        }
        self.cycle += 1;
        let ids = chosen.iter().map(|&i| self.states[i].stream.clone()).collect();
        self.pending = chosen;
        ids
    }

    /// Applies the last selection's detection results in stream-id order.
    /// Priority moves first using the old confidence, then the confidence updates.
    pub fn apply_cycle_results(
        &mut self,
        results: &[DetectionResult<T>],
    ) -> Result<Vec<StateUpdate<T>>, SchedulerError> {
        let mut order: Vec<(usize, &DetectionResult<T>)> = Vec::with_capacity(results.len());
        for r in results {
            let i = self
                .index_of(&r.stream)
                .filter(|i| self.pending.contains(i))
                .ok_or_else(|| SchedulerError::NotSelected(r.stream.clone()))?;
            order.push((i, r));
        }
        order.sort_by_key(|(i, _)| *i);
        if let Some(w) = order.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(SchedulerError::DuplicateResult(w[0].1.stream.clone()));
        }
        let mut updates = Vec::with_capacity(order.len());
        for (i, r) in order {
            let s = &mut self.states[i];
            s.p = update_priority(s.p, r.detected, s.c, &self.config);
            s.c = update_confidence(s.c, &r.scores);
            updates.push(StateUpdate {
                stream: s.stream.clone(),
                p: s.p,
                c: s.c,
            });
        }
        self.pending.clear();
        Ok(updates)
    }
}

/// Builds the initial table.
pub fn init_table<T: Real>(
    streams: Vec<StreamId>,
    config: SchedulerConfig<T>,
) -> Result<PriorityTable<T>, SchedulerError> {
    PriorityTable::new(streams, config)
}
