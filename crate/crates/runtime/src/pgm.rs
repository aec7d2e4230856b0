//! Binary PGM (`P5`, maxval 255) reading and writing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use streamwatch_core::Frame;
use thiserror::Error;

/// Largest accepted width or height.
pub const MAX_DIM: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("not a binary PGM: magic {0:?}")]
    BadMagic(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    BadMaxval(u64),
    #[error("pixel data truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("dimensions {width}x{height} exceed {MAX_DIM}")]
    TooLarge { width: u64, height: u64 },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader(format!("expected {what}")))
    }
}

/// Parses an in-memory PGM; the frame index is 0.
pub fn parse_pgm(bytes: &[u8]) -> Result<Frame, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(PgmError::BadMagic(magic));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::BadMagic(String::from_utf8_lossy(&bytes[..3.min(bytes.len())]).into_owned()));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    if width > MAX_DIM as u64 || height > MAX_DIM as u64 {
        return Err(PgmError::TooLarge { width, height });
    }
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader(format!("zero dimension {width}x{height}")));
    }
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PgmError::BadMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(PgmError::BadHeader("missing whitespace after maxval".into()));
    }
    let raster = &bytes[cur.pos + 1..];
    let expected = (width * height) as usize;
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: raster.len(),
        });
    }
    Frame::new(width as usize, height as usize, 0, raster[..expected].to_vec())
        .map_err(|e| PgmError::BadHeader(e.to_string()))
}

pub fn read_pgm(path: &Path) -> Result<Frame, PgmError> {
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pgm(&bytes)
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<(), PgmError> {
    fs::write(path, encode_pgm(frame)).map_err(|source| PgmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `*.pgm` files of a directory in name order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, PgmError> {
    let io_err = |source| PgmError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}
