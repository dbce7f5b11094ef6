//! Grayscale frames, frame sequences and small image containers.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Integer pixel coordinate. Ordered by `(y, x)` so sorted collections iterate in
/// row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub y: usize,
    pub x: usize,
}

impl Point {
    pub const fn new(x: usize, y: usize) -> Self {
        Point { y, x }
    }
}

/// A single grayscale frame, luminance stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::param(
                "data",
                format!("{} samples for a {width}x{height} frame", data.len()),
            ));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Frame {
            width,
            height,
            data: alloc::vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Frame {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// `(min, max)` luminance.
    pub fn range(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Frame rotated by 90° counter-clockwise: `(x, y) -> (y, width - 1 - x)`.
    pub fn rotate90(&self) -> Frame {
        let (w, h) = (self.width, self.height);
        Frame::from_fn(h, w, |nx, ny| self.get(w - 1 - ny, nx))
    }
}

/// Ordered grayscale frames sharing one size, with frame rate and optional
/// millimetre-per-pixel scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    fps: f64,
    scale_mm_per_px: Option<f64>,
}

impl FrameSequence {
    /// Validates that frames are non-empty, equally sized, finite and in `[0, 1]`,
    /// and that `fps > 0`.
    pub fn new(frames: Vec<Frame>, fps: f64, scale_mm_per_px: Option<f64>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::param("fps", format!("must be positive, got {fps}")));
        }
        if let Some(s) = scale_mm_per_px {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param("scale", format!("must be positive, got {s}")));
            }
        }
        let first = frames.first().ok_or(Error::Empty("frame sequence"))?;
        let (w, h) = (first.width, first.height);
        for f in &frames {
            if f.width != w || f.height != h {
                return Err(Error::DimensionMismatch {
                    expected_width: w,
                    expected_height: h,
                    width: f.width,
                    height: f.height,
                });
            }
            if let Some(bad) = f.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::param(
                    "frames",
                    format!("luminance {bad} outside [0, 1]"),
                ));
            }
        }
        Ok(FrameSequence {
            frames,
            fps,
            scale_mm_per_px,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn scale_mm_per_px(&self) -> Option<f64> {
        self.scale_mm_per_px
    }

    pub fn with_scale(mut self, scale_mm_per_px: Option<f64>) -> Result<Self> {
        if let Some(s) = scale_mm_per_px {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param("scale", format!("must be positive, got {s}")));
            }
        }
        self.scale_mm_per_px = scale_mm_per_px;
        Ok(self)
    }

    /// Same frames in reverse time order.
    pub fn reversed(&self) -> FrameSequence {
        let mut frames = self.frames.clone();
        frames.reverse();
        FrameSequence {
            frames,
            fps: self.fps,
            scale_mm_per_px: self.scale_mm_per_px,
        }
    }
}

/// Luminosity conversion used by colour-to-gray preprocessing (Rec. 601 weights).
#[inline]
pub fn luminance(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }
}
