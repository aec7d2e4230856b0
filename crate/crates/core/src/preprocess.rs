//! Frame preprocessing: letterbox removal, crop/transpose, adjacent-frame
//! differencing, and the motion-energy summary.
//!
//! The order applied to real footage is border detection on a reference
//! frame, cropping every frame of the window to that rect, then differencing.

use thiserror::Error;

use crate::types::{DiffWindow, Frame, FrameWindow};

/// Intensity at or below which a row/column counts as letterbox.
pub const DEFAULT_DARK_THRESHOLD: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("rect {rect:?} exceeds {width}x{height} frame")]
    RectOutOfBounds {
        rect: ContentRect,
        width: usize,
        height: usize,
    },
}

/// Axis-aligned region of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContentRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl ContentRect {
    pub fn full(frame: &Frame) -> Self {
        Self {
            x0: 0,
            y0: 0,
            w: frame.width(),
            h: frame.height(),
        }
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.w >= 1
            && self.h >= 1
            && self.x0.checked_add(self.w).is_some_and(|r| r <= width)
            && self.y0.checked_add(self.h).is_some_and(|b| b <= height)
    }

    /// The same region in transposed coordinates.
    pub fn transposed(&self) -> Self {
        Self {
            x0: self.y0,
            y0: self.x0,
            w: self.h,
            h: self.w,
        }
    }
}

/// Smallest rect covering every row and column whose brightest pixel exceeds
/// `dark_threshold`. An all-dark frame yields the full rect.
pub fn remove_borders(frame: &Frame, dark_threshold: u8) -> ContentRect {
    let (w, h) = frame.dims();
    let mut row_max = vec![0u8; h];
    let mut col_max = vec![0u8; w];
    for (y, row) in frame.pixels().chunks_exact(w).enumerate() {
        for (x, &v) in row.iter().enumerate() {
            row_max[y] = row_max[y].max(v);
            col_max[x] = col_max[x].max(v);
        }
    }
    let lit = |m: &u8| *m > dark_threshold;
    let (Some(y0), Some(y1)) = (row_max.iter().position(lit), row_max.iter().rposition(lit)) else {
        return ContentRect::full(frame);
    };
    // a lit row implies a lit column
    let x0 = col_max.iter().position(lit).unwrap_or(0);
    let x1 = col_max.iter().rposition(lit).unwrap_or(w - 1);
    ContentRect {
        x0,
        y0,
        w: x1 - x0 + 1,
        h: y1 - y0 + 1,
    }
}

pub fn crop(frame: &Frame, rect: ContentRect) -> Result<Frame, PreprocessError> {
    let (width, height) = frame.dims();
    if !rect.fits(width, height) {
        return Err(PreprocessError::RectOutOfBounds { rect, width, height });
    }
    let mut out = Vec::with_capacity(rect.w * rect.h);
    for y in rect.y0..rect.y0 + rect.h {
        let start = y * width + rect.x0;
        out.extend_from_slice(&frame.pixels()[start..start + rect.w]);
    }
    Ok(Frame::new(rect.w, rect.h, frame.index(), out).expect("rect checked against frame"))
}

/// Crops every frame of a window to the same rect.
pub fn crop_window(window: &FrameWindow, rect: ContentRect) -> Result<FrameWindow, PreprocessError> {
    let frames = window
        .frames()
        .iter()
        .map(|f| crop(f, rect))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameWindow::new(window.stream().clone(), frames).expect("cropping preserves window invariants"))
}

/// Swaps rows and columns: `out(x, y) = in(y, x)`.
pub fn transpose(frame: &Frame) -> Frame {
    let (w, h) = frame.dims();
    let src = frame.pixels();
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    Frame::new(h, w, frame.index(), out).expect("transpose preserves pixel count")
}

/// `diffs[k] = |frames[k+1] - frames[k]|` per pixel.
pub fn diff_window(window: &FrameWindow) -> DiffWindow {
    let (w, h) = window.dims();
    let diffs = window
        .frames()
        .windows(2)
        .map(|pair| {
            let px = pair[0]
                .pixels()
                .iter()
                .zip(pair[1].pixels())
                .map(|(&a, &b)| a.abs_diff(b))
                .collect();
            Frame::new(w, h, pair[0].index(), px).expect("same dims as source")
        })
        .collect();
    DiffWindow::new(window.stream().clone(), diffs).expect("window has at least one pair")
}

/// Mean of `(pixel / 255)^2` over every diff pixel, in `[0, 1]`.
///
/// Squares are accumulated as integers and divided once at the end, so any
/// other implementation using the same order agrees bit for bit.
pub fn motion_energy(dw: &DiffWindow) -> f64 {
    let mut sum: u64 = 0;
    let mut count: u64 = 0;
    for d in dw.diffs() {
        for &v in d.pixels() {
            sum += u64::from(v) * u64::from(v);
        }
        count += d.pixels().len() as u64;
    }
    sum as f64 / (count as f64 * 65025.0)
}
