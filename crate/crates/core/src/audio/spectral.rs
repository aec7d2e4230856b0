//! STFT, mel filterbank, MFCC and chroma.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioClip, AudioError, SpecKind, Spectrogram};
use crate::scalar::Real;

/// Floor added to mel energies before the natural log.
pub const LOG_MEL_FLOOR: f64 = 1e-10;
/// Bins below this frequency do not contribute to chroma.
pub const CHROMA_MIN_HZ: f64 = 20.0;

/// Periodic Hann window, `0.5 (1 - cos(2 pi n / N))`.
pub fn hann<T: Real>(n_fft: usize) -> Vec<T> {
    let n = T::from_count(n_fft);
    (0..n_fft)
        .map(|i| T::lit(0.5) * (T::one() - (T::TAU() * T::from_count(i) / n).cos()))
        .collect()
}

/// Magnitude STFT: frames at `0, hop, 2 hop, ...` while a full window fits,
/// `n_fft / 2 + 1` bins each.
pub fn stft<T: Real>(clip: &AudioClip<T>, n_fft: usize, hop: usize) -> Result<Spectrogram<T>, AudioError> {
    if n_fft < 8 || !n_fft.is_power_of_two() {
        return Err(AudioError::BadFftSize(n_fft));
    }
    if hop == 0 || hop > n_fft {
        return Err(AudioError::BadHop { hop, n_fft });
    }
    if clip.len() < n_fft {
        return Err(AudioError::TooShort {
            needed: n_fft,
            got: clip.len(),
        });
    }
    let window = hann::<T>(n_fft);
    let fft = FftPlanner::<T>::new().plan_fft_forward(n_fft);
    let n_bins = n_fft / 2 + 1;
    let n_frames = (clip.len() - n_fft) / hop + 1;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let frames = (0..n_frames)
        .map(|f| {
            let seg = &clip.samples()[f * hop..f * hop + n_fft];
            for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex::new(x * w, T::zero());
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf[..n_bins].iter().map(|z| z.norm()).collect()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        n_fft,
        hop,
        sample_rate: clip.sample_rate(),
        kind: SpecKind::Magnitude,
    })
}

/// Squares a magnitude spectrogram.
pub fn power<T: Real>(spec: &Spectrogram<T>) -> Result<Spectrogram<T>, AudioError> {
    spec.expect_kind(SpecKind::Magnitude)?;
    Ok(spec.map(SpecKind::Power, |x| x * x))
}

pub fn hz_to_mel<T: Real>(f: T) -> Result<T, AudioError> {
    if !(f >= T::zero()) {
        return Err(AudioError::NegativeInput);
    }
    Ok(T::lit(2595.0) * (T::one() + f / T::lit(700.0)).log10())
}

pub fn mel_to_hz<T: Real>(m: T) -> Result<T, AudioError> {
    if !(m >= T::zero()) {
        return Err(AudioError::NegativeInput);
    }
    Ok(T::lit(700.0) * (T::lit(10.0).powf(m / T::lit(2595.0)) - T::one()))
}

/// `n_mels + 2` mel-equispaced edge frequencies from `f_min` to `f_max`.
pub fn mel_edges<T: Real>(n_mels: usize, f_min: T, f_max: T) -> Result<Vec<T>, AudioError> {
    let lo = hz_to_mel(f_min)?;
    let hi = hz_to_mel(f_max)?;
    let step = (hi - lo) / T::from_count(n_mels + 1);
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + step * T::from_count(i)))
        .collect()
}

/// Triangle rising from `left` to a peak of 1 at `center` and back to zero
/// at `right`. Filter `m` uses edges `m`, `m + 1`, `m + 2`.
#[inline]
pub fn triangle<T: Real>(left: T, center: T, right: T, f: T) -> T {
    let up = (f - left) / (center - left);
    let down = (right - f) / (right - center);
    up.min(down).max(T::zero())
}

/// `n_mels x (n_fft / 2 + 1)` filter weights.
pub fn mel_filterbank<T: Real>(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    f_min: T,
    f_max: T,
) -> Result<Vec<Vec<T>>, AudioError> {
    if n_mels < 1 {
        return Err(AudioError::BadMelCount(n_mels));
    }
    let nyquist = T::from_u32(sample_rate).expect("rate representable") / T::lit(2.0);
    if !(f_min >= T::zero() && f_min < f_max && f_max <= nyquist) {
        return Err(AudioError::BadBand);
    }
    let edges = mel_edges(n_mels, f_min, f_max)?;
    let bin_hz = T::from_u32(sample_rate).expect("rate representable") / T::from_count(n_fft);
    let n_bins = n_fft / 2 + 1;
    Ok((0..n_mels)
        .map(|m| {
            (0..n_bins)
                .map(|k| triangle(edges[m], edges[m + 1], edges[m + 2], bin_hz * T::from_count(k)))
                .collect()
        })
        .collect())
}

/// Applies the mel filterbank to a power spectrogram.
pub fn mel_spectrogram<T: Real>(
    spec: &Spectrogram<T>,
    n_mels: usize,
    f_min: T,
    f_max: T,
) -> Result<Spectrogram<T>, AudioError> {
    spec.expect_kind(SpecKind::Power)?;
    let bank = mel_filterbank(n_mels, spec.n_fft, spec.sample_rate, f_min, f_max)?;
    let frames = spec
        .frames
        .iter()
        .map(|row| {
            bank.iter()
                .map(|filter| filter.iter().zip(row).map(|(&w, &p)| w * p).sum())
                .collect()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        kind: SpecKind::Mel,
        ..spec.clone_meta()
    })
}

/// `ln(mel + 1e-10)`.
pub fn log_mel<T: Real>(spec: &Spectrogram<T>) -> Result<Spectrogram<T>, AudioError> {
    spec.expect_kind(SpecKind::Mel)?;
    Ok(spec.map(SpecKind::LogMel, |x| (x + T::lit(LOG_MEL_FLOOR)).ln()))
}

/// Orthonormal DCT-II of each log-mel row, first `n_mfcc` coefficients.
pub fn mfcc<T: Real>(log_mel: &Spectrogram<T>, n_mfcc: usize) -> Result<Vec<Vec<T>>, AudioError> {
    log_mel.expect_kind(SpecKind::LogMel)?;
    let n_mels = log_mel.frames.first().map_or(0, Vec::len);
    if n_mfcc == 0 || n_mfcc > n_mels {
        return Err(AudioError::BadCoefficientCount { n_mfcc, n_mels });
    }
    let m = T::from_count(n_mels);
    let basis: Vec<Vec<T>> = (0..n_mfcc)
        .map(|k| {
            let scale = if k == 0 { (T::one() / m).sqrt() } else { (T::lit(2.0) / m).sqrt() };
            (0..n_mels)
                .map(|n| {
                    let arg = T::PI() * T::from_count(k) * T::from_count(2 * n + 1) / (T::lit(2.0) * m);
                    scale * arg.cos()
                })
                .collect()
        })
        .collect();
    Ok(log_mel
        .frames
        .iter()
        .map(|row| {
            basis
                .iter()
                .map(|b| b.iter().zip(row).map(|(&w, &x)| w * x).sum())
                .collect()
        })
        .collect())
}

/// Pitch class (0 = C) of a frequency in Hz.
pub fn pitch_class<T: Real>(f: T) -> usize {
    let semis = (T::lit(12.0) * (f / T::lit(440.0)).log2()).round();
    let semis = semis.to_i64().expect("finite frequency");
    (semis + 9).rem_euclid(12) as usize
}

/// Accumulates magnitudes into 12 pitch classes per frame, skipping bins below 20 Hz.
pub fn chroma<T: Real>(spec: &Spectrogram<T>) -> Result<Vec<[T; 12]>, AudioError> {
    spec.expect_kind(SpecKind::Magnitude)?;
    let bin_hz = T::from_u32(spec.sample_rate).expect("rate representable") / T::from_count(spec.n_fft);
    let classes: Vec<Option<usize>> = (0..spec.n_fft / 2 + 1)
        .map(|k| {
            let f = bin_hz * T::from_count(k);
            (f >= T::lit(CHROMA_MIN_HZ)).then(|| pitch_class(f))
        })
        .collect();
    Ok(spec
        .frames
        .iter()
        .map(|row| {
            let mut out = [T::zero(); 12];
            for (x, class) in row.iter().zip(&classes) {
                if let Some(c) = class {
                    out[*c] = out[*c] + *x;
                }
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stft_frame_count() {
        let clip = AudioClip::new(vec![0.0f64; 1024], 8000).unwrap();
        let s = stft(&clip, 256, 128).unwrap();
        assert_eq!(s.frames.len(), 7);
        assert!(s.frames.iter().all(|r| r.len() == 129 && r.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn stft_preconditions() {
        let clip = AudioClip::new(vec![0.0f64; 100], 8000).unwrap();
        assert!(matches!(stft(&clip, 256, 128), Err(AudioError::TooShort { .. })));
        assert!(matches!(stft(&clip, 48, 8), Err(AudioError::BadFftSize(48))));
        assert!(matches!(stft(&clip, 4, 1), Err(AudioError::BadFftSize(4))));
        assert!(matches!(stft(&clip, 64, 0), Err(AudioError::BadHop { .. })));
        assert!(matches!(stft(&clip, 64, 65), Err(AudioError::BadHop { .. })));
    }

    #[test]
    fn hann_is_periodic() {
        let w = hann::<f64>(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[1] - w[7]).abs() < 1e-15);
    }

    #[test]
    fn mel_scale_values() {
        assert_eq!(hz_to_mel(0.0f64).unwrap(), 0.0);
        assert!((hz_to_mel(700.0f64).unwrap() - 2595.0 * 2f64.log10()).abs() < 1e-6);
        for f in [100.0f64, 1000.0, 8000.0] {
            let back = mel_to_hz(hz_to_mel(f).unwrap()).unwrap();
            assert!(((back - f) / f).abs() < 1e-9);
        }
        assert!(hz_to_mel(-1.0f64).is_err());
        assert!(mel_to_hz(-1.0f64).is_err());
    }

    #[test]
    fn filterbank_shape_and_bounds() {
        let bank = mel_filterbank(26, 512, 16000, 0.0f64, 8000.0).unwrap();
        assert_eq!(bank.len(), 26);
        for filter in &bank {
            assert_eq!(filter.len(), 257);
            assert!(filter.iter().all(|&w| (0.0..=1.0).contains(&w)));
            // unimodal: rises then falls
            let peak = filter
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert!(filter[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(filter[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(mel_filterbank(0, 512, 16000, 0.0f64, 8000.0).is_err());
        assert!(mel_filterbank(10, 512, 16000, 100.0f64, 9000.0).is_err());
        assert!(mel_filterbank(10, 512, 16000, 500.0f64, 500.0).is_err());
    }

    #[test]
    fn triangle_peaks_at_center() {
        assert_eq!(triangle(100.0, 200.0, 400.0, 200.0), 1.0);
        assert_eq!(triangle(100.0, 200.0, 400.0, 300.0), 0.5);
        assert_eq!(triangle(100.0, 200.0, 400.0, 50.0), 0.0);
    }

    #[test]
    fn constant_log_mel_has_only_c0() {
        let v = -3.5f64;
        let spec = Spectrogram {
            frames: vec![vec![v; 26]],
            n_fft: 256,
            hop: 128,
            sample_rate: 8000,
            kind: SpecKind::LogMel,
        };
        let c = mfcc(&spec, 13).unwrap();
        assert!((c[0][0] - v * 26f64.sqrt()).abs() < 1e-12);
        assert!(c[0][1..].iter().all(|x| x.abs() < 1e-12));
        assert!(mfcc(&spec, 27).is_err());
    }

    #[test]
    fn pitch_classes() {
        assert_eq!(pitch_class(440.0f64), 9);
        assert_eq!(pitch_class(880.0f64), 9);
        assert_eq!(pitch_class(261.63f64), 0);
        assert_eq!(pitch_class(27.5f64), 9);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let clip = AudioClip::new(vec![0.1f64; 64], 8000).unwrap();
        let mag = stft(&clip, 32, 16).unwrap();
        assert!(matches!(mel_spectrogram(&mag, 4, 0.0, 4000.0), Err(AudioError::WrongKind { .. })));
        assert!(chroma(&power(&mag).unwrap()).is_err());
    }
}
