use crate::error::TypeError;
use crate::rng::{draw_u64, stream_key, Salt};
use crate::types::{EventTimeline, Frame, FrameWindow, StreamId, DEFAULT_WINDOW_LEN};

/// Shape of synthetic footage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    /// Differences per window; windows hold `len + 1` frames.
    pub len: usize,
    /// Per-pixel noise amplitude (`±noise`).
    pub noise: u8,
    /// Background intensities are drawn from `0..=background_max`.
    pub background_max: u8,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            len: DEFAULT_WINDOW_LEN,
            noise: 1,
            background_max: 200,
        }
    }
}

/// Intensity of the moving block.
pub const BLOCK_INTENSITY: u8 = 255;
/// Horizontal block displacement per frame, in pixels.
pub const BLOCK_SPEED: usize = 2;

/// Window for `(stream, cycle)`: a static seeded background with `±noise`
/// jitter; on violent cycles a quarter-area block slides right by 2 px per
/// frame, wrapping around. Frames are numbered `cycle * len ..= cycle * len + len`.
pub fn gen_synthetic_frames(
    stream: &StreamId,
    cycle: u64,
    timeline: &EventTimeline,
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<FrameWindow, TypeError> {
    let (w, h) = (spec.width, spec.height);
    if w < 8 || h < 8 {
        return Err(TypeError::EmptyFrame { width: w, height: h });
    }
    if spec.len == 0 {
        return Err(TypeError::WindowTooShort(1));
    }
    let key = stream_key(stream);
    let npix = w * h;
    let background: Vec<u8> = (0..npix as u64)
        .map(|i| match spec.background_max {
            0 => 0,
            m => (draw_u64(seed, key, i, Salt::Background) % (u64::from(m) + 1)) as u8,
        })
        .collect();
    let violent = timeline.is_violent(stream, cycle);
    let (bw, bh) = (w / 2, h / 2);
    let y0 = (draw_u64(seed, key, 0, Salt::Placement) % (h - bh + 1) as u64) as usize;
    let x_base = (draw_u64(seed, key, 1, Salt::Placement) % w as u64) as usize;
    let span = 2 * u64::from(spec.noise) + 1;

    let first = cycle * spec.len as u64;
    let frames = (0..=spec.len as u64)
        .map(|k| {
            let g = first + k;
            let mut px = background.clone();
            if spec.noise > 0 {
                for (i, p) in px.iter_mut().enumerate() {
                    let r = draw_u64(seed, key, g * npix as u64 + i as u64, Salt::Noise) % span;
                    let v = i16::from(*p) + r as i16 - i16::from(spec.noise);
                    *p = v.clamp(0, 255) as u8;
                }
            }
            if violent {
                let x0 = (x_base + BLOCK_SPEED * (g % w as u64) as usize) % w;
                for y in y0..y0 + bh {
                    for dx in 0..bw {
                        px[y * w + (x0 + dx) % w] = BLOCK_INTENSITY;
                    }
                }
            }
            Frame::new(w, h, g, px)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FrameWindow::new(stream.clone(), frames)
}
