//! Phase-based velocity, integration to displacement and unit conversion.
//!
//! Velocity follows `v = -(∂φ/∂s)⁻¹ · ∂φ/∂t`. Because local phase increases along the
//! steering axis (see [`crate::filter`]), this is positive for motion towards +x
//! (or +y), matching the synthetic scenes' displacement sign. Both derivatives are
//! taken as angles of complex products, so neither ever sees a 2π wrap.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::filter::{Orientation, QuadratureResponse};
use crate::{Error, Point, Result};

/// Engineering unit of a displacement series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    Px,
    Mm,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Px => "px",
            Units::Mm => "mm",
        }
    }
}

/// Relative in-plane displacement of one point, one sample per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSignal {
    pub point: Point,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub units: Units,
    pub fps: f64,
    /// Velocity samples that were invalid and replaced by zero (both axes).
    pub gaps: usize,
}

impl DisplacementSignal {
    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.dx,
            Axis::Y => &self.dy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Three responses centred on a pixel along the steering axis: `s-1, s, s+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub minus: Complex64,
    pub center: Complex64,
    pub plus: Complex64,
    /// All three samples passed the amplitude test.
    pub valid: bool,
}

impl Stencil {
    /// Samples `resp` around `(x, y)`; pixels whose stencil leaves the response region
    /// are reported invalid.
    pub fn sample(resp: &QuadratureResponse, x: usize, y: usize) -> Stencil {
        let region = resp.region();
        let (xm, ym, xp, yp) = match resp.orientation() {
            Orientation::Horizontal => (x.wrapping_sub(1), y, x + 1, y),
            Orientation::Vertical => (x, y.wrapping_sub(1), x, y + 1),
        };
        if !(region.contains(xm, ym) && region.contains(xp, yp) && region.contains(x, y)) {
            let zero = Complex64::new(0.0, 0.0);
            return Stencil {
                minus: zero,
                center: zero,
                plus: zero,
                valid: false,
            };
        }
        Stencil {
            minus: resp.at(xm, ym),
            center: resp.at(x, y),
            plus: resp.at(xp, yp),
            valid: resp.is_valid(xm, ym) && resp.is_valid(x, y) && resp.is_valid(xp, yp),
        }
    }
}

/// Velocity (px/frame) from the stencils of two consecutive frames, or `None` when
/// either stencil is invalid or the phase slope is below `slope_floor`.
pub fn stencil_velocity(prev: &Stencil, curr: &Stencil, slope_floor: f64) -> Option<f64> {
    if !(prev.valid && curr.valid) {
        return None;
    }
    // ∂φ/∂s: half the phase advance across s-1 → s+1, pooled over both frames.
    let spread = curr.plus * curr.minus.conj() + prev.plus * prev.minus.conj();
    let slope = 0.5 * spread.im.atan2(spread.re);
    if !(slope.abs() >= slope_floor) {
        return None;
    }
    let step = curr.center * prev.center.conj();
    let dphi_dt = step.im.atan2(step.re);
    let v = -dphi_dt / slope;
    v.is_finite().then_some(v)
}

/// One velocity component over a response region.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityComponent {
    pub orientation: Orientation,
    pub width: usize,
    pub height: usize,
    /// px/frame, `0.0` where invalid.
    pub v: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Velocity field with both components; a pixel is valid when both are.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub width: usize,
    pub height: usize,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub valid: Vec<bool>,
}

impl VelocityField {
    pub fn from_components(vx: VelocityComponent, vy: VelocityComponent) -> Result<Self> {
        if vx.orientation != Orientation::Horizontal
            || vy.orientation != Orientation::Vertical
            || vx.width != vy.width
            || vx.height != vy.height
        {
            return Err(Error::ResponseMismatch);
        }
        let valid = vx.valid.iter().zip(&vy.valid).map(|(a, b)| *a && *b).collect();
        Ok(VelocityField {
            width: vx.width,
            height: vx.height,
            vx: vx.v,
            vy: vy.v,
            valid,
        })
    }
}

/// Per-pixel velocity along the responses' steering axis between two consecutive
/// frames. Output covers the responses' region.
pub fn phase_velocity(
    prev: &QuadratureResponse,
    curr: &QuadratureResponse,
    slope_floor: f64,
) -> Result<VelocityComponent> {
    if prev.orientation() != curr.orientation()
        || prev.region() != curr.region()
        || prev.frame_size() != curr.frame_size()
    {
        return Err(Error::ResponseMismatch);
    }
    let region = prev.region();
    let mut v = vec![0.0; region.area()];
    let mut valid = vec![false; region.area()];
    for y in region.y0..region.y1() {
        for x in region.x0..region.x1() {
            let i = (y - region.y0) * region.width + (x - region.x0);
            let a = Stencil::sample(prev, x, y);
            let b = Stencil::sample(curr, x, y);
            if let Some(vel) = stencil_velocity(&a, &b, slope_floor) {
                v[i] = vel;
                valid[i] = true;
            }
        }
    }
    Ok(VelocityComponent {
        orientation: prev.orientation(),
        width: region.width,
        height: region.height,
        v,
        valid,
    })
}

/// Cumulative displacement from per-frame velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedSeries {
    /// `d[0] = 0`, `d[t] = d[t-1] + v[t]`; one longer than the velocity input.
    pub d: Vec<f64>,
    /// Samples that were missing or non-finite and counted as zero.
    pub gaps: usize,
}

/// Integrates velocities `v[1..=n]` (px/frame) into displacement `d[0..=n]`.
///
/// Velocity is already per frame, so no fps factor enters.
pub fn integrate_velocity(velocities: &[Option<f64>]) -> IntegratedSeries {
    let mut d = Vec::with_capacity(velocities.len() + 1);
    let mut gaps = 0;
    let mut acc = 0.0;
    d.push(0.0);
    for v in velocities {
        match v {
            Some(v) if v.is_finite() => acc += v,
            _ => gaps += 1,
        }
        d.push(acc);
    }
    IntegratedSeries { d, gaps }
}

/// Millimetres per pixel from a marker of known size.
pub fn scale_from_marker(width_px: f64, width_mm: f64) -> Result<f64> {
    if !(width_px.is_finite() && width_px > 0.0) {
        return Err(Error::param(
            "width_px",
            format!("must be positive, got {width_px}"),
        ));
    }
    if !(width_mm.is_finite() && width_mm > 0.0) {
        return Err(Error::param(
            "width_mm",
            format!("must be positive, got {width_mm}"),
        ));
    }
    Ok(width_mm / width_px)
}

/// Converts a pixel signal to millimetres.
pub fn to_units(signal: &DisplacementSignal, scale_mm_per_px: f64) -> Result<DisplacementSignal> {
    if !(scale_mm_per_px.is_finite() && scale_mm_per_px > 0.0) {
        return Err(Error::param(
            "scale",
            format!("must be positive, got {scale_mm_per_px}"),
        ));
    }
    if signal.units != Units::Px {
        return Err(Error::param("units", "signal is already in millimetres"));
    }
    Ok(DisplacementSignal {
        point: signal.point,
        dx: signal.dx.iter().map(|v| v * scale_mm_per_px).collect(),
        dy: signal.dy.iter().map(|v| v * scale_mm_per_px).collect(),
        units: Units::Mm,
        fps: signal.fps,
        gaps: signal.gaps,
    })
}
