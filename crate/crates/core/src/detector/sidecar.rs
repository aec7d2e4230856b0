//! Client side of the external detector process.
//!
//! One client owns one connection. A background thread decodes replies so a
//! request can time out without leaving the stream half-read.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde_json::Value;

use super::wire::{self, DetectorError, WireError, WireMessage, PROTOCOL_VERSION};
use crate::types::{DiffWindow, ScoreVector, StreamId};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(1000);

/// Where the external detector lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SidecarEndpoint {
    /// Program and arguments; spoken to over its stdin/stdout.
    Command(Vec<String>),
    /// `host:port`.
    Tcp(String),
}

pub struct SidecarClient {
    writer: Box<dyn Write + Send>,
    replies: Receiver<Result<WireMessage, WireError>>,
    child: Option<Child>,
    tcp: Option<TcpStream>,
    timeout: Duration,
    next_id: u64,
}

impl SidecarClient {
    pub fn connect(endpoint: &SidecarEndpoint, timeout: Duration) -> Result<Self, DetectorError> {
        match endpoint {
            SidecarEndpoint::Command(argv) => Self::spawn(argv, timeout),
            SidecarEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| DetectorError::Unavailable(format!("connect {addr}: {e}")))?;
                let _ = stream.set_nodelay(true);
                let clone = |s: &TcpStream| s.try_clone().map_err(|e| DetectorError::Unavailable(e.to_string()));
                let reader = clone(&stream)?;
                let control = clone(&stream)?;
                Self::open(reader, stream, None, Some(control), timeout)
            }
        }
    }

    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, DetectorError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| DetectorError::Unavailable("empty sidecar command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| DetectorError::Unavailable(format!("spawn {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::open(stdout, stdin, Some(child), None, timeout)
    }

    /// Wraps an already-open duplex channel and performs the hello exchange.
    pub fn handshake<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self, DetectorError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::open(reader, writer, None, None, timeout)
    }

    fn open<R, W>(
        reader: R,
        writer: W,
        child: Option<Child>,
        tcp: Option<TcpStream>,
        timeout: Duration,
    ) -> Result<Self, DetectorError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("sidecar-reader".into())
            .spawn(move || {
                let mut reader = BufReader::new(reader);
                loop {
                    let msg = WireMessage::read_from(&mut reader);
                    let stop = msg.is_err();
                    if tx.send(msg).is_err() || stop {
                        break;
                    }
                }
            })
            .map_err(|e| DetectorError::Unavailable(e.to_string()))?;
        let mut client = Self {
            writer: Box::new(BufWriter::new(writer)),
            replies: rx,
            child,
            tcp,
            timeout,
            next_id: 1,
        };
        client.send(&wire::hello())?;
        let reply = client.recv()?;
        let version = reply.header.get("version").and_then(Value::as_u64);
        if reply.op() != "hello" || version != Some(PROTOCOL_VERSION) {
            return Err(DetectorError::Protocol(format!(
                "handshake failed: got op {:?} version {version:?}",
                reply.op()
            )));
        }
        Ok(client)
    }

    fn send(&mut self, msg: &WireMessage) -> Result<(), DetectorError> {
        msg.write_to(&mut self.writer)
            .map_err(|e| DetectorError::Transport(WireError::Io(e)))
    }

    fn recv(&mut self) -> Result<WireMessage, DetectorError> {
        match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(msg)) => Ok(msg),
            Ok(Err(e)) => Err(DetectorError::Transport(e)),
            Err(RecvTimeoutError::Timeout) => Err(DetectorError::Timeout(self.timeout.as_millis() as u64)),
            Err(RecvTimeoutError::Disconnected) => Err(DetectorError::Transport(WireError::Closed)),
        }
    }

    /// Sends one `infer` request and waits for its reply.
    pub fn infer(&mut self, stream: &StreamId, dw: &DiffWindow) -> Result<ScoreVector, DetectorError> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&wire::encode_request(stream, id, dw))?;
        let reply = self.recv()?;
        wire::decode_response(&reply, id)
    }
}

impl Drop for SidecarClient {
    fn drop(&mut self) {
        if let Some(tcp) = self.tcp.take() {
            let _ = tcp.shutdown(std::net::Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            // closing stdin ends a well-behaved sidecar
            self.writer = Box::new(std::io::sink());
            if child.try_wait().ok().flatten().is_none() {
                thread::sleep(Duration::from_millis(10));
                if child.try_wait().ok().flatten().is_none() {
                    let _ = child.kill();
                }
            }
            let _ = child.wait();
        }
    }
}
