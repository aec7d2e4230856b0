//! Canonical run-log and metrics serialization.
//!
//! Each event is one JSON object per line with keys in this order:
//!
//! | type      | keys after `type`                          |
//! |-----------|--------------------------------------------|
//! | `service` | `cycle`, `stream`, `score`, `detected`     |
//! | `alert`   | `cycle`, `stream`, `event_start`, `ttd`    |
//! | `update`  | `cycle`, `stream`, `p`, `c`                |
//! | `skip`    | `cycle`, `stream`, `reason`                |
//!
//! Reals are printed in fixed point with 9 fractional digits.

use std::fmt::Write as _;
use std::io::{self, Write};

use streamwatch_core::sim::{Event, EventSink, SimMetrics};

pub const METRICS_HEADER: &str = "policy,seed,n,b,tau,events_total,events_detected,events_missed,\
mean_ttd,p95_ttd,services_total,maintenance_total,max_wait";

/// Fixed-point with 9 fractional digits; negative zero prints as zero.
pub fn format_real(x: f64) -> String {
    format!("{:.9}", x + 0.0)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn event_line(event: &Event) -> String {
    let mut line = String::with_capacity(96);
    let head = |line: &mut String, kind: &str, cycle: u64, stream: &str| {
        let _ = write!(line, r#"{{"type":"{kind}","cycle":{cycle},"stream":{}"#, json_str(stream));
    };
    match event {
        Event::Service {
            cycle,
            stream,
            score,
            detected,
        } => {
            head(&mut line, "service", *cycle, stream.as_str());
            let _ = write!(line, r#","score":{},"detected":{detected}}}"#, format_real(*score));
        }
        Event::Alert {
            cycle,
            stream,
            event_start,
            ttd,
        } => {
            head(&mut line, "alert", *cycle, stream.as_str());
            let _ = write!(line, r#","event_start":{event_start},"ttd":{ttd}}}"#);
        }
        Event::Update { cycle, stream, p, c } => {
            head(&mut line, "update", *cycle, stream.as_str());
            let _ = write!(line, r#","p":{},"c":{}}}"#, format_real(*p), format_real(*c));
        }
        Event::Skip { cycle, stream, reason } => {
            head(&mut line, "skip", *cycle, stream.as_str());
            let _ = write!(line, r#","reason":{}}}"#, json_str(reason));
        }
    }
    line
}

/// Writes events as JSON lines. The first I/O error is kept and later
/// records are dropped; check it with [`JsonlSink::finish`].
pub struct JsonlSink<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventSink for JsonlSink<W> {
    fn record(&mut self, event: Event) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{}", event_line(&event)) {
                self.error = Some(e);
            }
        }
    }
}

pub fn metrics_row(m: &SimMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.policy,
        m.seed,
        m.n,
        m.b,
        m.tau,
        m.events_total,
        m.events_detected,
        m.events_missed,
        format_real(m.mean_ttd),
        format_real(m.p95_ttd),
        m.services_total,
        format_real(m.maintenance_total),
        m.max_wait
    )
}

pub fn write_metrics<W: Write>(mut out: W, rows: &[SimMetrics]) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in rows {
        writeln!(out, "{}", metrics_row(m))?;
    }
    out.flush()
}
