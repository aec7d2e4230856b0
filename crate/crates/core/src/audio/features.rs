use super::{AudioClip, AudioError};
use crate::scalar::Real;

/// Floor added to the RMS before taking decibels.
pub const LOUDNESS_FLOOR: f64 = 1e-12;

/// Fraction of adjacent sample pairs with strictly opposite sign.
pub fn zcr<T: Real>(clip: &AudioClip<T>) -> Result<T, AudioError> {
    Ok(T::from_count(zero_crossings(clip)?) / T::from_count(clip.len() - 1))
}

/// Number of adjacent pairs whose product is negative.
pub fn zero_crossings<T: Real>(clip: &AudioClip<T>) -> Result<usize, AudioError> {
    if clip.len() < 2 {
        return Err(AudioError::TooShort { needed: 2, got: clip.len() });
    }
    Ok(clip
        .samples()
        .windows(2)
        .filter(|w| w[0] * w[1] < T::zero())
        .count())
}

/// Mean squared amplitude.
pub fn energy<T: Real>(clip: &AudioClip<T>) -> T {
    clip.samples().iter().map(|&x| x * x).sum::<T>() / T::from_count(clip.len())
}

/// `20 log10(rms + 1e-12)`; silence reads -240 dB.
pub fn loudness_db<T: Real>(clip: &AudioClip<T>) -> T {
    T::lit(20.0) * (energy(clip).sqrt() + T::lit(LOUDNESS_FLOOR)).log10()
}
