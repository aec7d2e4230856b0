//! Framing for the external detector protocol.
//!
//! A message is a big-endian `u32` header length, that many bytes of UTF-8
//! JSON (an object with an `"op"` field), then a raw payload. The payload
//! length is implied by the header: `product(dims)` bytes when `"dims"` is
//! present (dtype `u8`), zero otherwise.
//!
//! Ops: `hello`, `infer`, `result`, `error`.

use std::io::{self, Read, Write};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::types::{DiffWindow, Frame, ScoreVector, StreamId};

pub const PROTOCOL_VERSION: u64 = 1;
pub const MAX_HEADER_LEN: u32 = 1 << 20;
pub const MAX_PAYLOAD_LEN: u64 = 1 << 30;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("connection closed")]
    Closed,
    #[error("truncated frame: {0}")]
    Truncated(&'static str),
    #[error("header length {0} exceeds limit")]
    HeaderTooLarge(u32),
    #[error("payload of {0} bytes exceeds limit")]
    PayloadTooLarge(u64),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("payload is {actual} bytes but header implies {expected}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Errors surfaced by any detector.
#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("detector precondition violated: {0}")]
    Precondition(String),
    #[error("detector unavailable: {0}")]
    Unavailable(String),
    #[error("transport error: {0}")]
    Transport(#[from] WireError),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("detector error: {0}")]
    Remote(String),
    #[error("detector timed out after {0} ms")]
    Timeout(u64),
}

impl DetectorError {
    /// Short tag used in skip records.
    pub fn reason(&self) -> &'static str {
        match self {
            Self::Precondition(_) => "precondition",
            Self::Unavailable(_) => "unavailable",
            Self::Transport(_) => "transport",
            Self::Protocol(_) => "protocol",
            Self::Remote(_) => "remote",
            Self::Timeout(_) => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub header: Map<String, Value>,
    pub payload: Vec<u8>,
}

fn header_payload_len(header: &Map<String, Value>) -> Result<usize, WireError> {
    let Some(dims) = header.get("dims") else {
        return Ok(0);
    };
    let dims = dims
        .as_array()
        .ok_or_else(|| WireError::BadHeader("dims must be an array".into()))?;
    let mut total: u64 = 1;
    for d in dims {
        let d = d
            .as_u64()
            .ok_or_else(|| WireError::BadHeader("dims must hold unsigned integers".into()))?;
        total = total
            .checked_mul(d)
            .filter(|t| *t <= MAX_PAYLOAD_LEN)
            .ok_or(WireError::PayloadTooLarge(d))?;
    }
    Ok(total as usize)
}

impl WireMessage {
    /// Builds a message, checking the header shape and payload length.
    pub fn new(header: Map<String, Value>, payload: Vec<u8>) -> Result<Self, WireError> {
        if !header.get("op").is_some_and(Value::is_string) {
            return Err(WireError::BadHeader("missing string field \"op\"".into()));
        }
        let expected = header_payload_len(&header)?;
        if expected != payload.len() {
            return Err(WireError::PayloadLength {
                expected,
                actual: payload.len(),
            });
        }
        Ok(Self { header, payload })
    }

    pub fn from_value(header: Value, payload: Vec<u8>) -> Result<Self, WireError> {
        match header {
            Value::Object(map) => Self::new(map, payload),
            _ => Err(WireError::BadHeader("header is not a JSON object".into())),
        }
    }

    pub fn op(&self) -> &str {
        self.header.get("op").and_then(Value::as_str).unwrap_or_default()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("JSON map serializes");
        let mut out = Vec::with_capacity(4 + header.len() + self.payload.len());
        out.extend_from_slice(&(header.len() as u32).to_be_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.to_bytes())?;
        w.flush()
    }

    /// Reads one message. A clean EOF before the length prefix is [`WireError::Closed`].
    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Self, WireError> {
        let mut len = [0u8; 4];
        match read_full(r, &mut len)? {
            0 => return Err(WireError::Closed),
            4 => {}
            _ => return Err(WireError::Truncated("length prefix")),
        }
        let len = u32::from_be_bytes(len);
        if len > MAX_HEADER_LEN {
            return Err(WireError::HeaderTooLarge(len));
        }
        let mut header = vec![0u8; len as usize];
        if read_full(r, &mut header)? != header.len() {
            return Err(WireError::Truncated("header"));
        }
        let header: Value =
            serde_json::from_slice(&header).map_err(|e| WireError::BadHeader(e.to_string()))?;
        let Value::Object(header) = header else {
            return Err(WireError::BadHeader("header is not a JSON object".into()));
        };
        let mut payload = vec![0u8; header_payload_len(&header)?];
        if read_full(r, &mut payload)? != payload.len() {
            return Err(WireError::Truncated("payload"));
        }
        Self::new(header, payload)
    }

    /// Decodes a complete byte buffer holding exactly one message.
    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self, WireError> {
        let msg = Self::read_from(&mut bytes)?;
        if !bytes.is_empty() {
            return Err(WireError::BadHeader(format!("{} trailing bytes", bytes.len())));
        }
        Ok(msg)
    }
}

fn read_full<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn build(header: Value, payload: Vec<u8>) -> WireMessage {
    WireMessage::from_value(header, payload).expect("well-formed by construction")
}

pub fn hello() -> WireMessage {
    build(json!({"op": "hello", "version": PROTOCOL_VERSION}), Vec::new())
}

pub fn error_message(message: &str) -> WireMessage {
    build(json!({"op": "error", "message": message}), Vec::new())
}

pub fn result_message(request_id: u64, scores: &[f64]) -> WireMessage {
    build(
        json!({"op": "result", "request_id": request_id, "scores": scores}),
        Vec::new(),
    )
}

/// `infer` request: dims `[L, H, W]`, payload window-major then row-major.
pub fn encode_request(stream: &StreamId, request_id: u64, dw: &DiffWindow) -> WireMessage {
    let (w, h) = dw.dims();
    let mut payload = Vec::with_capacity(dw.len() * w * h);
    for d in dw.diffs() {
        payload.extend_from_slice(d.pixels());
    }
    build(
        json!({
            "op": "infer",
            "stream": stream.as_str(),
            "request_id": request_id,
            "dims": [dw.len(), h, w],
            "dtype": "u8",
        }),
        payload,
    )
}

fn field<'a>(msg: &'a WireMessage, key: &str) -> Result<&'a Value, DetectorError> {
    msg.header
        .get(key)
        .ok_or_else(|| DetectorError::Protocol(format!("missing field {key:?}")))
}

/// Inverse of [`encode_request`]. Diff frames are numbered from 0.
pub fn decode_request(msg: &WireMessage) -> Result<(StreamId, u64, DiffWindow), DetectorError> {
    if msg.op() != "infer" {
        return Err(DetectorError::Protocol(format!("expected infer, got {:?}", msg.op())));
    }
    let stream = field(msg, "stream")?
        .as_str()
        .and_then(|s| StreamId::new(s).ok())
        .ok_or_else(|| DetectorError::Protocol("bad stream id".into()))?;
    let request_id = field(msg, "request_id")?
        .as_u64()
        .ok_or_else(|| DetectorError::Protocol("bad request_id".into()))?;
    if field(msg, "dtype")?.as_str() != Some("u8") {
        return Err(DetectorError::Protocol("unsupported dtype".into()));
    }
    let dims: Vec<usize> = field(msg, "dims")?
        .as_array()
        .map(|a| a.iter().filter_map(|d| d.as_u64().map(|d| d as usize)).collect())
        .unwrap_or_default();
    let [len, h, w] = dims[..] else {
        return Err(DetectorError::Protocol("dims must be [L, H, W]".into()));
    };
    if len == 0 || h == 0 || w == 0 {
        return Err(DetectorError::Protocol("dims must be positive".into()));
    }
    let diffs = msg
        .payload
        .chunks_exact(w * h)
        .enumerate()
        .map(|(k, px)| Frame::new(w, h, k as u64, px.to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| DetectorError::Protocol(e.to_string()))?;
    let dw = DiffWindow::new(stream.clone(), diffs).map_err(|e| DetectorError::Protocol(e.to_string()))?;
    Ok((stream, request_id, dw))
}

/// Extracts the scores of a `result` reply to request `expected_id`.
pub fn decode_response(msg: &WireMessage, expected_id: u64) -> Result<ScoreVector, DetectorError> {
    match msg.op() {
        "result" => {}
        "error" => {
            let message = msg
                .header
                .get("message")
                .and_then(Value::as_str)
                .unwrap_or("unspecified error");
            return Err(DetectorError::Remote(message.to_string()));
        }
        other => return Err(DetectorError::Protocol(format!("unexpected op {other:?}"))),
    }
    let id = field(msg, "request_id")?
        .as_u64()
        .ok_or_else(|| DetectorError::Protocol("bad request_id".into()))?;
    if id != expected_id {
        return Err(DetectorError::Protocol(format!(
            "request_id {id} does not match expected {expected_id}"
        )));
    }
    let scores = field(msg, "scores")?
        .as_array()
        .ok_or_else(|| DetectorError::Protocol("scores must be an array".into()))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| DetectorError::Protocol("non-numeric score".into())))
        .collect::<Result<Vec<_>, _>>()?;
    ScoreVector::new(scores).map_err(|e| DetectorError::Protocol(e.to_string()))
}
