//! Harris corner detection inside a region of interest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::{Error, Frame, Result};

/// Axis-aligned rectangle in frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Roi {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub const fn new(x0: usize, y0: usize, width: usize, height: usize) -> Self {
        Roi {
            x0,
            y0,
            width,
            height,
        }
    }

    /// The whole frame.
    pub const fn full(width: usize, height: usize) -> Self {
        Roi::new(0, 0, width, height)
    }

    pub fn x1(&self) -> usize {
        self.x0 + self.width
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    /// Errors when the rectangle is empty or sticks out of a `w × h` frame.
    pub fn check_inside(&self, w: usize, h: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidRoi(format!("{self:?} is empty")));
        }
        if self.x1() > w || self.y1() > h {
            return Err(Error::InvalidRoi(format!(
                "{self:?} exceeds the {w}x{h} frame"
            )));
        }
        Ok(())
    }

    /// [`Roi::check_inside`] plus a minimum side length.
    pub fn validate(&self, w: usize, h: usize, min_side: usize) -> Result<()> {
        self.check_inside(w, h)?;
        if self.width < min_side || self.height < min_side {
            return Err(Error::InvalidRoi(format!(
                "{self:?} is smaller than {min_side} px on a side"
            )));
        }
        Ok(())
    }

    /// Grows by `margin` on each side, clipped to a `w × h` frame.
    pub fn expand(&self, margin: usize, w: usize, h: usize) -> Roi {
        let x0 = self.x0.saturating_sub(margin);
        let y0 = self.y0.saturating_sub(margin);
        let x1 = (self.x1() + margin).min(w);
        let y1 = (self.y1() + margin).min(h);
        Roi::new(x0, y0, x1 - x0, y1 - y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisParams {
    /// Trace weight in `det(M) - k·trace(M)²`.
    pub k: f64,
    /// Gaussian window of the structure tensor, px.
    pub window_sigma: f64,
    /// Keep responses above this fraction of the ROI maximum.
    pub threshold_rel: f64,
    /// Non-maximum suppression radius, px (Euclidean).
    pub nms_radius: f64,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            k: 0.04,
            window_sigma: 1.5,
            threshold_rel: 0.01,
            nms_radius: 3.0,
        }
    }
}

impl HarrisParams {
    fn check(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::param("k", format!("must be positive, got {}", self.k)));
        }
        if !(self.window_sigma.is_finite() && self.window_sigma > 0.0) {
            return Err(Error::param(
                "window_sigma",
                format!("must be positive, got {}", self.window_sigma),
            ));
        }
        if !(self.threshold_rel.is_finite() && (0.0..1.0).contains(&self.threshold_rel)) {
            return Err(Error::param(
                "threshold_rel",
                format!("must be in [0, 1), got {}", self.threshold_rel),
            ));
        }
        if !(self.nms_radius.is_finite() && self.nms_radius >= 1.0) {
            return Err(Error::param(
                "nms_radius",
                format!("must be at least 1, got {}", self.nms_radius),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// Corners found in `roi`, sorted by `(y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub points: Vec<Feature>,
    pub roi: Roi,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Harris response `det(M) - k·trace(M)²` for every ROI pixel, row-major over the ROI.
pub fn harris_response(frame: &Frame, roi: Roi, params: &HarrisParams) -> Result<Vec<f64>> {
    params.check()?;
    let (w, h) = (frame.width(), frame.height());
    roi.check_inside(w, h)?;
    let radius = (3.0 * params.window_sigma).ceil() as usize;
    let area = roi.expand(radius, w, h);
    let (aw, ah) = (area.width, area.height);

    let px = |x: usize, y: usize| frame.get(x, y) as f64;
    let mut ixx = vec![0.0; aw * ah];
    let mut iyy = vec![0.0; aw * ah];
    let mut ixy = vec![0.0; aw * ah];
    for ay in 0..ah {
        let y = area.y0 + ay;
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for ax in 0..aw {
            let x = area.x0 + ax;
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let gx = (px(xp, y) - px(xm, y)) / (xp - xm).max(1) as f64;
            let gy = (px(x, yp) - px(x, ym)) / (yp - ym).max(1) as f64;
            let i = ay * aw + ax;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }

    let window = gaussian_taps(params.window_sigma, radius);
    let sxx = smooth_separable(&ixx, aw, ah, &window);
    let syy = smooth_separable(&iyy, aw, ah, &window);
    let sxy = smooth_separable(&ixy, aw, ah, &window);

    let mut out = Vec::with_capacity(roi.area());
    for y in roi.y0..roi.y1() {
        for x in roi.x0..roi.x1() {
            let i = (y - area.y0) * aw + (x - area.x0);
            let (a, b, c) = (sxx[i], syy[i], sxy[i]);
            let trace = a + b;
            out.push(a * b - c * c - params.k * trace * trace);
        }
    }
    Ok(out)
}

/// Detects Harris corners in `roi`.
///
/// A pixel is kept when its response exceeds `threshold_rel · max(R)` and it is the
/// largest response within `nms_radius` (ties go to the earlier pixel in row-major
/// order). A region without any positive response yields an empty set.
pub fn harris_corners(frame: &Frame, roi: Roi, params: &HarrisParams) -> Result<FeatureSet> {
    let response = harris_response(frame, roi, params)?;
    let max = response.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Ok(FeatureSet {
            points: Vec::new(),
            roi,
        });
    }
    let threshold = params.threshold_rel * max;
    let r = params.nms_radius.floor() as isize;
    let r2 = params.nms_radius * params.nms_radius;
    let (rw, rh) = (roi.width as isize, roi.height as isize);
    let mut points = Vec::new();
    for oy in 0..rh {
        'pixel: for ox in 0..rw {
            let i = (oy * rw + ox) as usize;
            let v = response[i];
            if !(v > threshold) {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if (dx == 0 && dy == 0) || ((dx * dx + dy * dy) as f64) > r2 {
                        continue;
                    }
                    let (nx, ny) = (ox + dx, oy + dy);
                    if nx < 0 || ny < 0 || nx >= rw || ny >= rh {
                        continue;
                    }
                    let j = (ny * rw + nx) as usize;
                    let other = response[j];
                    if other > v || (other == v && j < i) {
                        continue 'pixel;
                    }
                }
            }
            points.push(Feature {
                x: roi.x0 + ox as usize,
                y: roi.y0 + oy as usize,
                score: v,
            });
        }
    }
    Ok(FeatureSet { points, roi })
}

/// Grayscale copy of `background` with feature pixels set to white.
pub fn overlay_features(background: &Frame, features: &FeatureSet) -> Frame {
    let mut out = background.clone();
    for p in &features.points {
        out.set(p.x, p.y, 1.0);
    }
    out
}

pub(crate) fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable smoothing with clamped borders.
fn smooth_separable(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * src[y * w + clamp(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * tmp[clamp(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_edge(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, _| {
            (0.5 + 0.4 * libm::erf((x as f64 - w as f64 / 2.0 - 0.3) / 0.8)) as f32
        })
    }

    #[test]
    fn uniform_frame_has_no_corners() {
        let f = Frame::filled(32, 32, 0.4);
        let set = harris_corners(&f, Roi::full(32, 32), &HarrisParams::default()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn straight_edge_has_no_corners() {
        let f = step_edge(40, 40);
        let set = harris_corners(&f, Roi::full(40, 40), &HarrisParams::default()).unwrap();
        assert!(set.is_empty(), "{:?}", set.points);
    }

    #[test]
    fn degenerate_roi_is_an_error() {
        let f = Frame::filled(32, 32, 0.4);
        let p = HarrisParams::default();
        assert!(harris_corners(&f, Roi::new(0, 0, 0, 5), &p).is_err());
        assert!(harris_corners(&f, Roi::new(20, 20, 20, 5), &p).is_err());
    }

    #[test]
    fn bad_params_are_rejected() {
        let f = Frame::filled(8, 8, 0.4);
        let p = HarrisParams {
            threshold_rel: 1.5,
            ..HarrisParams::default()
        };
        assert!(harris_corners(&f, Roi::full(8, 8), &p).is_err());
    }

    #[test]
    fn overlay_marks_features_white() {
        let f = Frame::filled(8, 8, 0.2);
        let set = FeatureSet {
            points: alloc::vec![Feature { x: 3, y: 4, score: 1.0 }],
            roi: Roi::full(8, 8),
        };
        let o = overlay_features(&f, &set);
        assert_eq!(o.get(3, 4), 1.0);
        assert_eq!(o.get(4, 4), 0.2);
    }

    #[test]
    fn roi_expand_clips() {
        let r = Roi::new(2, 3, 4, 4).expand(5, 10, 9);
        assert_eq!(r, Roi::new(0, 0, 10, 9));
    }
}
