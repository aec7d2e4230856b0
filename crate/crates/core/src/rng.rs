//! Counter-based random draws keyed by `(seed, stream, counter, salt)`.
//!
//! Every draw is a pure function of its key, so adding a stream or a policy
//! never shifts another stream's sequence.

use crate::types::StreamId;

/// Salt values separating independent uses of the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Salt {
    Timeline = 0x7469_6d65,
    Oracle = 0x6f72_6163,
    Background = 0x6267_726e,
    Noise = 0x6e6f_6973,
    Placement = 0x706c_6163,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the id bytes; stable across platforms and toolchains.
pub fn stream_key(id: &StreamId) -> u64 {
    id.as_str().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Raw 64-bit draw.
#[inline]
pub fn draw_u64(seed: u64, stream: u64, counter: u64, salt: Salt) -> u64 {
    let mut h = splitmix(seed ^ salt as u64);
    h = splitmix(h ^ stream);
    splitmix(h ^ counter)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn draw_unit(seed: u64, stream: u64, counter: u64, salt: Salt) -> f64 {
    (draw_u64(seed, stream, counter, salt) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
