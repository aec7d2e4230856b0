//! RIFF/WAVE reader for 16-bit mono PCM.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use streamwatch_core::audio::{AudioClip, AudioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file")]
    NotRiff,
    #[error("unsupported format code {0}, only PCM (1) is accepted")]
    FormatCode(u16),
    #[error("expected 1 channel, found {0}")]
    Channels(u16),
    #[error("expected 16 bits per sample, found {0}")]
    BitDepth(u16),
    #[error("no fmt chunk before data")]
    MissingFmt,
    #[error("no data chunk")]
    MissingData,
    #[error("chunk {0:?} is truncated")]
    Truncated(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

struct Format {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn u32_at(b: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

/// Samples are `s / 32768`, so values lie in `[-1, 1)`.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip<f64>, WavError> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotRiff);
    }
    let mut pos = 12;
    let mut format: Option<Format> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let name = String::from_utf8_lossy(id).into_owned();
        match id {
            b"fmt " => {
                if size < 16 || body_start + 16 > bytes.len() {
                    return Err(WavError::Truncated(name));
                }
                let b = &bytes[body_start..];
                let code = u16_at(b, 0);
                if code != 1 {
                    return Err(WavError::FormatCode(code));
                }
                format = Some(Format {
                    channels: u16_at(b, 2),
                    sample_rate: u32_at(b, 4),
                    bits: u16_at(b, 14),
                });
            }
            b"data" => {
                let fmt = format.ok_or(WavError::MissingFmt)?;
                if fmt.channels != 1 {
                    return Err(WavError::Channels(fmt.channels));
                }
                if fmt.bits != 16 {
                    return Err(WavError::BitDepth(fmt.bits));
                }
                let end = body_start
                    .checked_add(size)
                    .filter(|e| *e <= bytes.len())
                    .ok_or(WavError::Truncated(name))?;
                let samples = bytes[body_start..end]
                    .chunks_exact(2)
                    .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
                    .collect();
                return Ok(AudioClip::new(samples, fmt.sample_rate)?);
            }
            _ => {}
        }
        // chunks are padded to even length
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    Err(WavError::MissingData)
}

pub fn read_wav(path: &Path) -> Result<AudioClip<f64>, WavError> {
    let bytes = fs::read(path).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_wav(&bytes)
}

/// Canonical 44-byte-header PCM16 mono file.
pub fn encode_wav(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
