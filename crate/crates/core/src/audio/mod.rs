//! Audio features (ZCR, energy, loudness, STFT, mel, MFCC, chroma) and
//! min-max fusion of audio and video scores.

mod features;
mod fusion;
mod spectral;

use thiserror::Error;

use crate::scalar::Real;

pub use features::{energy, loudness_db, zcr, zero_crossings, LOUDNESS_FLOOR};
pub use fusion::fuse_minmax;
pub use spectral::{
    chroma, hann, hz_to_mel, log_mel, mel_edges, mel_filterbank, mel_spectrogram, mel_to_hz, mfcc,
    pitch_class, power, stft, triangle, CHROMA_MIN_HZ, LOG_MEL_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AudioError {
    #[error("audio clip is empty")]
    Empty,
    #[error("audio clip contains a non-finite sample")]
    NonFinite,
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("n_fft {0} must be a power of two >= 8")]
    BadFftSize(usize),
    #[error("hop {hop} must be in 1..={n_fft}")]
    BadHop { hop: usize, n_fft: usize },
    #[error("negative input to mel conversion")]
    NegativeInput,
    #[error("need 0 <= f_min < f_max <= sample_rate / 2")]
    BadBand,
    #[error("n_mels must be at least 1, got {0}")]
    BadMelCount(usize),
    #[error("n_mfcc {n_mfcc} must be in 1..={n_mels}")]
    BadCoefficientCount { n_mfcc: usize, n_mels: usize },
    #[error("expected a {expected:?} spectrogram, got {actual:?}")]
    WrongKind { expected: SpecKind, actual: SpecKind },
    #[error("{0} outside [0, 1]")]
    OutOfRange(&'static str),
}

/// Mono samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip<T: Real = f64> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> AudioClip<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        if sample_rate == 0 {
            return Err(AudioError::BadSampleRate);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(AudioError::NonFinite);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sub-clip `[start, start + len)`, zero-padded past the end.
    pub fn segment(&self, start: usize, len: usize) -> Self {
        let samples = (start..start + len)
            .map(|i| self.samples.get(i).copied().unwrap_or_else(T::zero))
            .collect();
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Magnitude,
    Power,
    Mel,
    LogMel,
}

/// Time-major rows of one spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T: Real = f64> {
    pub frames: Vec<Vec<T>>,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub kind: SpecKind,
}

impl<T: Real> Spectrogram<T> {
    fn expect_kind(&self, expected: SpecKind) -> Result<(), AudioError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(AudioError::WrongKind {
                expected,
                actual: self.kind,
            })
        }
    }

    fn clone_meta(&self) -> Self {
        Self {
            frames: Vec::new(),
            n_fft: self.n_fft,
            hop: self.hop,
            sample_rate: self.sample_rate,
            kind: self.kind,
        }
    }

    fn map(&self, kind: SpecKind, f: impl Fn(T) -> T) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|row| row.iter().map(|&x| f(x)).collect())
                .collect(),
            kind,
            ..self.clone_meta()
        }
    }
}

/// Per-window feature row: zcr, energy, loudness, MFCCs, chroma.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T: Real = f64> {
    pub zcr: T,
    pub energy: T,
    pub loudness_db: T,
    pub mfcc: Vec<T>,
    pub chroma: [T; 12],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_fft: 256,
            hop: 128,
            n_mels: 26,
            n_mfcc: 13,
        }
    }
}

/// One feature row per STFT window. A clip shorter than `n_fft` is
/// zero-padded to a single window. Mel bands span 0 Hz to Nyquist.
pub fn extract_features<T: Real>(clip: &AudioClip<T>, cfg: &FeatureConfig) -> Result<Vec<FeatureRow<T>>, AudioError> {
    let padded;
    let clip = if clip.len() < cfg.n_fft {
        padded = clip.segment(0, cfg.n_fft);
        &padded
    } else {
        clip
    };
    let mag = stft(clip, cfg.n_fft, cfg.hop)?;
    let nyquist = T::from_u32(clip.sample_rate()).expect("rate representable") / T::lit(2.0);
    let mel = mel_spectrogram(&power(&mag)?, cfg.n_mels, T::zero(), nyquist)?;
    let coeffs = mfcc(&log_mel(&mel)?, cfg.n_mfcc)?;
    let chroma_rows = chroma(&mag)?;
    coeffs
        .into_iter()
        .zip(chroma_rows)
        .enumerate()
        .map(|(i, (mfcc, chroma))| {
            let seg = clip.segment(i * cfg.hop, cfg.n_fft);
            Ok(FeatureRow {
                zcr: zcr(&seg)?,
                energy: energy(&seg),
                loudness_db: loudness_db(&seg),
                mfcc,
                chroma,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_validation() {
        assert_eq!(AudioClip::<f64>::new(vec![], 8000), Err(AudioError::Empty));
        assert_eq!(AudioClip::new(vec![f64::INFINITY], 8000), Err(AudioError::NonFinite));
        assert_eq!(AudioClip::new(vec![0.0f64], 0), Err(AudioError::BadSampleRate));
    }

    #[test]
    fn short_clip_yields_one_padded_window() {
        let clip = AudioClip::new(vec![0.0f64, 0.5, -1.0], 8000).unwrap();
        let rows = extract_features(&clip, &FeatureConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mfcc.len(), 13);
        assert!((rows[0].zcr - 1.0 / 255.0).abs() < 1e-15);
        assert!((rows[0].energy - 1.25 / 256.0).abs() < 1e-15);
    }
}
