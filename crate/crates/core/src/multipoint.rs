//! Multi-point measurement: displacement at every feature point, patch-weighted
//! aggregation with neighbouring features, and the dominant-frequency map.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::displacement::{
    integrate_velocity, stencil_velocity, Axis, DisplacementSignal, Stencil, Units,
};
use crate::features::{harris_corners, FeatureSet, HarrisParams, Roi};
use crate::filter::{analyze_region, FilterParams, QuadratureBank};
use crate::spectral::{fft_spectrum, Spectrum, Window};
use crate::{Error, FrameSequence, Point, Result, RgbImage};

/// Signals keyed by pixel, iterated in row-major order.
pub type SignalMap = BTreeMap<Point, DisplacementSignal>;

/// Square, odd-sided, non-negative patch weights.
///
/// Construction enforces point symmetry about the centre and values that never
/// increase moving away from the centre along either axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightKernel {
    side: usize,
    values: Vec<f64>,
}

impl WeightKernel {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if side.is_multiple_of(2) {
            return Err(Error::param("kernel", format!("side {side} is not odd")));
        }
        if values.len() != side * side {
            return Err(Error::param(
                "kernel",
                format!("{} values for a {side}x{side} kernel", values.len()),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("kernel", "weights must be finite and non-negative"));
        }
        let c = (side / 2) as isize;
        let at = |i: isize, j: isize| values[((j + c) * side as isize + (i + c)) as usize];
        if !(at(0, 0) > 0.0) {
            return Err(Error::param("kernel", "centre weight must be positive"));
        }
        for j in -c..=c {
            for i in -c..=c {
                let v = at(i, j);
                if v != at(-i, -j) {
                    return Err(Error::param(
                        "kernel",
                        format!("not symmetric at offset ({i}, {j})"),
                    ));
                }
                if i != 0 && v > at(i - i.signum(), j) || j != 0 && v > at(i, j - j.signum()) {
                    return Err(Error::param(
                        "kernel",
                        format!("weight increases away from the centre at offset ({i}, {j})"),
                    ));
                }
            }
        }
        Ok(WeightKernel { side, values })
    }

    /// Outer product of the binomial row `C(side-1, k)`.
    pub fn binomial(side: usize) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::param("kernel", format!("side {side} is not odd")));
        }
        let mut row = vec![1.0f64];
        for _ in 1..side {
            let mut next = vec![1.0; row.len() + 1];
            for k in 1..row.len() {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        let values = row
            .iter()
            .flat_map(|a| row.iter().map(move |b| a * b))
            .collect();
        WeightKernel::new(side, values)
    }

    pub fn uniform(side: usize) -> Result<Self> {
        WeightKernel::new(side, vec![1.0; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weight at offset `(i, j)` from the centre.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let c = (self.side / 2) as isize;
        self.values[((j + c) * self.side as isize + (i + c)) as usize]
    }
}

/// Normalised weights of the feature points inside the patch around `center`, in
/// row-major order. Non-feature pixels get no weight; the remaining weights sum to
/// one. Empty when the patch holds no feature.
pub fn patch_weights(
    center: Point,
    is_feature: impl Fn(Point) -> bool,
    kernel: &WeightKernel,
) -> Vec<(Point, f64)> {
    let half = (kernel.side / 2) as isize;
    let mut picked = Vec::new();
    for j in -half..=half {
        for i in -half..=half {
            let (x, y) = (center.x as isize + i, center.y as isize + j);
            if x < 0 || y < 0 {
                continue;
            }
            let p = Point::new(x as usize, y as usize);
            let k = kernel.at(i, j);
            if k > 0.0 && is_feature(p) {
                picked.push((p, k));
            }
        }
    }
    let total: f64 = picked.iter().map(|(_, k)| k).sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    picked.into_iter().map(|(p, k)| (p, k / total)).collect()
}

/// Patch-processed signal at `center`: the weighted sum of the signals of the
/// feature points in the surrounding `N × N` patch. `None` when the patch contains
/// no feature point.
pub fn patch_signal(
    center: Point,
    signals: &SignalMap,
    kernel: &WeightKernel,
) -> Option<DisplacementSignal> {
    let weights = patch_weights(center, |p| signals.contains_key(&p), kernel);
    let first = signals.get(&weights.first()?.0)?;
    let n = first.len();
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut gaps = 0;
    for (p, w) in &weights {
        let s = &signals[p];
        for t in 0..n {
            dx[t] += w * s.dx[t];
            dy[t] += w * s.dy[t];
        }
        gaps = gaps.max(s.gaps);
    }
    Some(DisplacementSignal {
        point: center,
        dx,
        dy,
        units: first.units,
        fps: first.fps,
        gaps,
    })
}

/// Frames processed together between sequential velocity updates.
const FRAME_CHUNK: usize = 32;

/// Phase-based displacement at each of `points`, in pixels.
///
/// Points need one valid pixel on either side along both axes, i.e. they must lie
/// at least `border + 1` pixels from every frame edge.
pub fn point_signals(
    seq: &FrameSequence,
    points: &[Point],
    filter: &FilterParams,
) -> Result<Vec<DisplacementSignal>> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            len: seq.len(),
            min: 2,
        });
    }
    if points.is_empty() {
        return Err(Error::Empty("point list"));
    }
    let bank = QuadratureBank::new(filter.sigma_px)?;
    let (w, h) = (seq.width(), seq.height());
    let margin = bank.horizontal.border() + 1;
    for p in points {
        if p.x < margin || p.y < margin || p.x + margin >= w || p.y + margin >= h {
            return Err(Error::param(
                "points",
                format!("({}, {}) is within {margin} px of the frame edge", p.x, p.y),
            ));
        }
    }
    let x0 = points.iter().map(|p| p.x).min().unwrap_or(0) - 1;
    let y0 = points.iter().map(|p| p.y).min().unwrap_or(0) - 1;
    let x1 = points.iter().map(|p| p.x).max().unwrap_or(0) + 2;
    let y1 = points.iter().map(|p| p.y).max().unwrap_or(0) + 2;
    let region = Roi::new(x0, y0, x1 - x0, y1 - y0);

    let frames = seq.frames();
    let sample = |t: usize| -> Result<Vec<[Stencil; 2]>> {
        let rh = analyze_region(&frames[t], &bank.horizontal, region, filter.amplitude_floor_rel)?;
        let rv = analyze_region(&frames[t], &bank.vertical, region, filter.amplitude_floor_rel)?;
        Ok(points
            .iter()
            .map(|p| [Stencil::sample(&rh, p.x, p.y), Stencil::sample(&rv, p.x, p.y)])
            .collect())
    };

    let n = points.len();
    let mut vx: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(seq.len() - 1); n];
    let mut vy: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(seq.len() - 1); n];
    let mut prev = sample(0)?;
    let mut start = 1;
    while start < seq.len() {
        let end = (start + FRAME_CHUNK).min(seq.len());
        let chunk = crate::par::map_range(end - start, |i| sample(start + i));
        for stencils in chunk {
            let stencils = stencils?;
            for (k, (a, b)) in prev.iter().zip(&stencils).enumerate() {
                vx[k].push(stencil_velocity(&a[0], &b[0], filter.slope_floor));
                vy[k].push(stencil_velocity(&a[1], &b[1], filter.slope_floor));
            }
            prev = stencils;
        }
        start = end;
    }

    Ok(points
        .iter()
        .zip(vx.iter().zip(&vy))
        .map(|(p, (vx, vy))| {
            let ix = integrate_velocity(vx);
            let iy = integrate_velocity(vy);
            DisplacementSignal {
                point: *p,
                dx: ix.d,
                dy: iy.d,
                units: Units::Px,
                fps: seq.fps(),
                gaps: ix.gaps + iy.gaps,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasureParams {
    pub filter: FilterParams,
    pub harris: HarrisParams,
}

/// Output of [`measure_points`].
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Features actually measured: detected on the first frame and far enough from
    /// the frame edge for the filters.
    pub features: FeatureSet,
    /// Per-feature displacement before patch processing.
    pub raw: SignalMap,
    /// Per-feature displacement after patch processing.
    pub patched: SignalMap,
    /// Fewer than two seconds of frames; spectra will be coarse.
    pub short_sequence: bool,
}

/// Detects features on the first frame inside `roi`, tracks their phase-based
/// displacement through the sequence and patch-processes every feature signal.
pub fn measure_points(
    seq: &FrameSequence,
    roi: Roi,
    kernel: &WeightKernel,
    params: &MeasureParams,
) -> Result<Measurement> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            len: seq.len(),
            min: 2,
        });
    }
    let bank = QuadratureBank::new(params.filter.sigma_px)?;
    let (w, h) = (seq.width(), seq.height());
    roi.validate(w, h, bank.horizontal.taps())?;
    if kernel.side() > roi.width.min(roi.height) {
        return Err(Error::param(
            "kernel",
            format!("{}-wide kernel exceeds the region of interest", kernel.side()),
        ));
    }
    let detected = harris_corners(&seq.frames()[0], roi, &params.harris)?;
    let margin = bank.horizontal.border() + 1;
    let points: Vec<_> = detected
        .points
        .into_iter()
        .filter(|p| p.x >= margin && p.y >= margin && p.x + margin < w && p.y + margin < h)
        .collect();
    if points.is_empty() {
        return Err(Error::NoFeatures);
    }
    let features = FeatureSet { points, roi };
    let coords: Vec<Point> = features.points.iter().map(|f| Point::new(f.x, f.y)).collect();
    let raw: SignalMap = point_signals(seq, &coords, &params.filter)?
        .into_iter()
        .map(|s| (s.point, s))
        .collect();
    let patched: SignalMap = crate::par::map_range(coords.len(), |i| {
        patch_signal(coords[i], &raw, kernel)
    })
    .into_iter()
    .flatten()
    .map(|s| (s.point, s))
    .collect();
    Ok(Measurement {
        features,
        raw,
        patched,
        short_sequence: (seq.len() as f64) < 2.0 * seq.fps(),
    })
}

/// Sample-wise mean of all signals.
pub fn mean_signal(signals: &SignalMap) -> Option<DisplacementSignal> {
    let first = signals.values().next()?;
    let n = first.len();
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    for s in signals.values() {
        for t in 0..n {
            dx[t] += s.dx[t];
            dy[t] += s.dy[t];
        }
    }
    let count = signals.len() as f64;
    dx.iter_mut().for_each(|v| *v /= count);
    dy.iter_mut().for_each(|v| *v /= count);
    Some(DisplacementSignal {
        point: first.point,
        dx,
        dy,
        units: first.units,
        fps: first.fps,
        gaps: signals.values().map(|s| s.gaps).sum(),
    })
}

/// Dominant frequency of a signal: the axis whose detrended spectrum has the larger
/// peak above `f_min`, and that peak's frequency.
pub fn dominant_frequency(signal: &DisplacementSignal, f_min: f64) -> Result<(Axis, f64)> {
    let sx = fft_spectrum(&signal.dx, signal.fps, Window::Rect)?;
    let sy = fft_spectrum(&signal.dy, signal.fps, Window::Rect)?;
    let px = sx.dominant(f_min);
    let py = sy.dominant(f_min);
    match (px, py) {
        (Some((fx, mx)), Some((fy, my))) => Ok(if my > mx { (Axis::Y, fy) } else { (Axis::X, fx) }),
        _ => Err(Error::param(
            "f_min",
            format!("no spectral bin between {f_min} Hz and Nyquist"),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyEntry {
    pub point: Point,
    pub freq_hz: f64,
    pub axis: Axis,
}

/// Dominant frequency per feature point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    pub entries: Vec<FrequencyEntry>,
    pub roi: Roi,
    pub fps: f64,
    pub f_min: f64,
}

impl FrequencyMap {
    /// `max - min` of the mapped frequencies.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e.freq_hz), hi.max(e.freq_hz))
            });
        if self.entries.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

pub fn dominant_frequency_map(signals: &SignalMap, roi: Roi, f_min: f64) -> Result<FrequencyMap> {
    let list: Vec<&DisplacementSignal> = signals.values().collect();
    let fps = list.first().ok_or(Error::Empty("signal map"))?.fps;
    let entries = crate::par::map_range(list.len(), |i| {
        dominant_frequency(list[i], f_min).map(|(axis, freq_hz)| FrequencyEntry {
            point: list[i].point,
            freq_hz,
            axis,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyMap {
        entries,
        roi,
        fps,
        f_min,
    })
}

/// Spectrum of the sample-wise mean of `signals` along its dominant axis.
pub fn mean_spectrum(signals: &SignalMap, f_min: f64, window: Window) -> Result<(Axis, Spectrum)> {
    let mean = mean_signal(signals).ok_or(Error::Empty("signal map"))?;
    let (axis, _) = dominant_frequency(&mean, f_min)?;
    Ok((axis, fft_spectrum(mean.axis(axis), mean.fps, window)?))
}

/// Linear frequency → hue colormap from blue (low) to red (high) with 256 levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Colormap {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Colormap {
    pub const LEVELS: usize = 256;

    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite() && f_hi > f_lo) {
            return Err(Error::param(
                "colormap",
                format!("empty range [{f_lo}, {f_hi}]"),
            ));
        }
        Ok(Colormap { f_lo, f_hi })
    }

    /// Frequency width of one colour level.
    pub fn step(&self) -> f64 {
        (self.f_hi - self.f_lo) / (Self::LEVELS - 1) as f64
    }

    pub fn level(&self, freq_hz: f64) -> usize {
        let t = ((freq_hz - self.f_lo) / self.step()).round();
        t.clamp(0.0, (Self::LEVELS - 1) as f64) as usize
    }

    pub fn color_of_level(level: usize) -> [u8; 3] {
        let hue = 240.0 * (1.0 - level as f64 / (Self::LEVELS - 1) as f64);
        hsv_to_rgb(hue)
    }

    pub fn encode(&self, freq_hz: f64) -> [u8; 3] {
        Self::color_of_level(self.level(freq_hz))
    }

    /// Frequency of the nearest colour level, or `None` for colours far from the map.
    pub fn decode(&self, rgb: [u8; 3]) -> Option<f64> {
        let dist = |c: [u8; 3]| {
            (0..3)
                .map(|i| (c[i] as i32 - rgb[i] as i32).pow(2))
                .sum::<i32>()
        };
        let (level, d) = (0..Self::LEVELS)
            .map(|l| (l, dist(Self::color_of_level(l))))
            .min_by_key(|&(l, d)| (d, l))?;
        (d <= 12).then(|| self.f_lo + level as f64 * self.step())
    }
}

/// Saturated, full-value colour for `hue` in degrees.
fn hsv_to_rgb(hue: f64) -> [u8; 3] {
    let h = (hue / 60.0).clamp(0.0, 5.999_999);
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |v: f64| (v * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

/// Height of the legend strip appended below rendered maps.
pub const LEGEND_HEIGHT: usize = 12;

/// Colours each mapped feature pixel by frequency over `[f_min, fps/2]` on top of
/// the grayscale `background`, and appends a legend strip running from `f_min`
/// (left) to Nyquist (right).
pub fn render_frequency_map(map: &FrequencyMap, background: &crate::Frame) -> Result<RgbImage> {
    if map.entries.is_empty() {
        return Err(Error::Empty("frequency map"));
    }
    let cmap = Colormap::new(map.f_min, map.fps / 2.0)?;
    let (w, h) = (background.width(), background.height());
    let mut data = Vec::with_capacity(w * (h + LEGEND_HEIGHT));
    for &v in background.data() {
        let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        data.push([g, g, g]);
    }
    for e in &map.entries {
        if e.point.x < w && e.point.y < h {
            data[e.point.y * w + e.point.x] = cmap.encode(e.freq_hz);
        }
    }
    for _ in 0..LEGEND_HEIGHT {
        for x in 0..w {
            let level = if w > 1 {
                x * (Colormap::LEVELS - 1) / (w - 1)
            } else {
                0
            };
            data.push(Colormap::color_of_level(level));
        }
    }
    Ok(RgbImage {
        width: w,
        height: h + LEGEND_HEIGHT,
        data,
    })
}
