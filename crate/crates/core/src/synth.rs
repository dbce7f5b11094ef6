//! Analytic test scenes with exactly known sub-pixel motion.
//!
//! Every pattern is a continuous function evaluated at displaced coordinates, so a
//! frame moved by `d` is `P(x - d)` with no resampling error.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::filter::DEFAULT_SIGMA_PX;
use crate::{Error, Frame, FrameSequence, Result};

/// Width of the erf transition on checkerboard edges, px.
const EDGE_SOFTNESS_PX: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// 2×2 checkerboard marker on mid-gray, centred in the frame.
    Checkerboard,
    /// Crossed sinusoidal grating `0.5 + 0.2·(sin kx + sin ky)`.
    Grating,
    /// Bright Gaussian spot centred in the frame.
    GaussianBlob,
}

impl Pattern {
    /// Pattern luminance at coordinates relative to the frame centre. `scale_px` is
    /// the grating wavelength, the checker square side or the blob sigma.
    pub fn eval(self, x: f64, y: f64, scale_px: f64) -> f64 {
        self.combine(self.term(x, scale_px), self.term(y, scale_px))
    }

    /// One-axis factor; the pattern is `combine(term(x), term(y))`.
    fn term(self, c: f64, scale: f64) -> f64 {
        match self {
            Pattern::Grating => (2.0 * PI * c / scale).sin(),
            Pattern::Checkerboard => {
                let s = EDGE_SOFTNESS_PX;
                let inside = 0.5 * (libm::erf((scale - c) / s) + libm::erf((scale + c) / s));
                libm::erf(c / s) * inside
            }
            Pattern::GaussianBlob => (-c * c / (2.0 * scale * scale)).exp(),
        }
    }

    fn combine(self, tx: f64, ty: f64) -> f64 {
        match self {
            Pattern::Grating => 0.5 + 0.2 * (tx + ty),
            Pattern::Checkerboard => 0.5 + 0.4 * tx * ty,
            Pattern::GaussianBlob => 0.1 + 0.8 * tx * ty,
        }
    }

    /// Scale that puts the grating at the default filter's pass-band peak.
    pub fn default_scale(self) -> f64 {
        match self {
            Pattern::Grating => 2.0 * PI * DEFAULT_SIGMA_PX / core::f64::consts::SQRT_2,
            Pattern::Checkerboard => 12.0,
            Pattern::GaussianBlob => 6.0,
        }
    }
}

/// Rigid sinusoidal motion of an analytic pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMotionSpec {
    pub pattern: Pattern,
    pub scale_px: f64,
    /// Peak displacement, px.
    pub amplitude_px: f64,
    pub freq_hz: f64,
    /// Phase at t = 0, radians.
    pub phase0: f64,
    /// Unit direction of motion.
    pub direction: [f64; 2],
    pub duration_s: f64,
    /// Standard deviation of additive Gaussian luminance noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticMotionSpec {
    fn default() -> Self {
        SyntheticMotionSpec {
            pattern: Pattern::Grating,
            scale_px: Pattern::Grating.default_scale(),
            amplitude_px: 0.3,
            freq_hz: 2.67,
            phase0: 0.0,
            direction: [1.0, 0.0],
            duration_s: 10.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticMotionSpec {
    /// Displacement `direction · a·sin(2πf·t/fps + phase0)` at frame `t`.
    pub fn displacement(&self, t: usize, fps: f64) -> [f64; 2] {
        let s = self.amplitude_px * (2.0 * PI * self.freq_hz * t as f64 / fps + self.phase0).sin();
        [self.direction[0] * s, self.direction[1] * s]
    }

    /// Number of frames rendered at `fps`.
    pub fn frame_count(&self, fps: f64) -> usize {
        (self.duration_s * fps).round() as usize
    }

    fn check(&self, fps: f64) -> Result<()> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::param("fps", format!("must be positive, got {fps}")));
        }
        if !(self.amplitude_px.is_finite() && self.amplitude_px >= 0.0) {
            return Err(Error::param(
                "amplitude_px",
                format!("must be non-negative, got {}", self.amplitude_px),
            ));
        }
        if !(self.freq_hz.is_finite() && self.freq_hz >= 0.0) {
            return Err(Error::param(
                "freq_hz",
                format!("must be non-negative, got {}", self.freq_hz),
            ));
        }
        if self.freq_hz >= fps / 2.0 {
            return Err(Error::Nyquist {
                freq_hz: self.freq_hz,
                nyquist_hz: fps / 2.0,
            });
        }
        let norm = self.direction[0].hypot(self.direction[1]);
        if !((norm - 1.0).abs() < 1e-9) {
            return Err(Error::param(
                "direction",
                format!("must be a unit vector, got norm {norm}"),
            ));
        }
        if !(self.scale_px.is_finite() && self.scale_px > 0.0) {
            return Err(Error::param(
                "scale_px",
                format!("must be positive, got {}", self.scale_px),
            ));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) || self.frame_count(fps) == 0 {
            return Err(Error::param(
                "duration_s",
                format!("must cover at least one frame, got {}", self.duration_s),
            ));
        }
        check_noise(self.noise_sigma)
    }
}

fn check_noise(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            "noise_sigma",
            format!("must be non-negative, got {sigma}"),
        ))
    }
}

/// Renders the rigid motion described by `spec`.
pub fn synthesize(
    spec: &SyntheticMotionSpec,
    width: usize,
    height: usize,
    fps: f64,
) -> Result<FrameSequence> {
    spec.check(fps)?;
    synthesize_rigid(
        spec.pattern,
        spec.scale_px,
        width,
        height,
        fps,
        spec.frame_count(fps),
        spec.noise_sigma,
        spec.seed,
        |t| spec.displacement(t, fps),
    )
}

/// Renders a pattern translated as a whole by `motion(t)` at frame `t`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_rigid<F>(
    pattern: Pattern,
    scale_px: f64,
    width: usize,
    height: usize,
    fps: f64,
    frames: usize,
    noise_sigma: f64,
    seed: u64,
    motion: F,
) -> Result<FrameSequence>
where
    F: Fn(usize) -> [f64; 2] + Sync + Send,
{
    check_noise(noise_sigma)?;
    if frames == 0 || width == 0 || height == 0 {
        return Err(Error::param("size", "need at least one non-empty frame"));
    }
    let (cx, cy) = centre(width, height);
    let mut out: Vec<Frame> = crate::par::map_range(frames, |t| {
        // Rigid motion keeps the pattern separable, so evaluate each axis once.
        let [dx, dy] = motion(t);
        let tx: Vec<f64> = (0..width)
            .map(|x| pattern.term(x as f64 - cx - dx, scale_px))
            .collect();
        let ty: Vec<f64> = (0..height)
            .map(|y| pattern.term(y as f64 - cy - dy, scale_px))
            .collect();
        Frame::from_fn(width, height, |x, y| pattern.combine(tx[x], ty[y]) as f32)
    });
    add_noise(&mut out, noise_sigma, seed)?;
    FrameSequence::new(out, fps, None)
}

/// Renders an arbitrary displacement field: frame `t` at pixel `(x, y)` shows
/// `P(x - dx, y - dy)` with `[dx, dy] = field(x, y, t)`. Used for non-rigid scenes
/// such as mode shapes or regions moving at different frequencies.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_field<F>(
    pattern: Pattern,
    scale_px: f64,
    width: usize,
    height: usize,
    fps: f64,
    frames: usize,
    noise_sigma: f64,
    seed: u64,
    field: F,
) -> Result<FrameSequence>
where
    F: Fn(usize, usize, usize) -> [f64; 2] + Sync + Send,
{
    check_noise(noise_sigma)?;
    if frames == 0 || width == 0 || height == 0 {
        return Err(Error::param("size", "need at least one non-empty frame"));
    }
    let (cx, cy) = centre(width, height);
    let mut out: Vec<Frame> = crate::par::map_range(frames, |t| {
        Frame::from_fn(width, height, |x, y| {
            let [dx, dy] = field(x, y, t);
            pattern.eval(x as f64 - cx - dx, y as f64 - cy - dy, scale_px) as f32
        })
    });
    add_noise(&mut out, noise_sigma, seed)?;
    FrameSequence::new(out, fps, None)
}

/// Pattern origin: the frame centre, nudged off the pixel grid so symmetric
/// patterns do not land exactly on sample points.
pub fn centre(width: usize, height: usize) -> (f64, f64) {
    (width as f64 / 2.0 + 0.25, height as f64 / 2.0 + 0.25)
}

fn add_noise(frames: &mut [Frame], sigma: f64, seed: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("noise_sigma", format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in frames {
        for v in f.data_mut() {
            let noisy = *v as f64 + normal.sample(&mut rng);
            *v = noisy.clamp(0.0, 1.0) as f32;
        }
    }
    Ok(())
}
