use super::AudioError;
use crate::scalar::Real;

/// Fuzzy min-max composition `max(min(video, w_video), min(audio, w_audio))`.
pub fn fuse_minmax<T: Real>(video: T, audio: T, w_video: T, w_audio: T) -> Result<T, AudioError> {
    for (name, v) in [("video", video), ("audio", audio), ("w_video", w_video), ("w_audio", w_audio)] {
        if !(v >= T::zero() && v <= T::one()) {
            return Err(AudioError::OutOfRange(name));
        }
    }
    Ok(video.min(w_video).max(audio.min(w_audio)))
}
