//! Automatic band selection, band-limited phase-based motion magnification and
//! operating deflection shapes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::displacement::Axis;
use crate::features::Roi;
use crate::fft::FftPlan;
use crate::filter::{analyze_region, FilterParams, QuadratureBank};
use crate::multipoint::{mean_spectrum, point_signals, SignalMap};
use crate::spectral::{
    detrend_mean, fft_spectrum, pick_modes, ModeEstimate, ModePickParams, Window, MIN_SPECTRUM_LEN,
};
use crate::{Error, Frame, FrameSequence, Point, Result};

/// Default band half-width in standard deviations.
pub const DEFAULT_EPSILON: f64 = 2.0;

/// Temporal pass band `[lo_hz, hi_hz]` with the statistics it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub mu_hz: f64,
    pub sigma_hz: f64,
    pub epsilon: f64,
}

impl FrequencyBand {
    /// A hand-specified band; `mu` is the centre and `sigma` is unknown (zero).
    pub fn manual(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz.is_finite() && hi_hz.is_finite() && 0.0 < lo_hz && lo_hz < hi_hz) {
            return Err(Error::param(
                "band",
                format!("need 0 < lo < hi, got [{lo_hz}, {hi_hz}]"),
            ));
        }
        Ok(FrequencyBand {
            lo_hz,
            hi_hz,
            mu_hz: 0.5 * (lo_hz + hi_hz),
            sigma_hz: 0.0,
            epsilon: 0.0,
        })
    }

    pub fn center_hz(&self) -> f64 {
        0.5 * (self.lo_hz + self.hi_hz)
    }

    /// Errors unless `0 < lo < hi < fps/2`.
    pub fn check(&self, fps: f64) -> Result<()> {
        if !(self.lo_hz > 0.0 && self.lo_hz < self.hi_hz) {
            return Err(Error::param(
                "band",
                format!("need 0 < lo < hi, got [{}, {}]", self.lo_hz, self.hi_hz),
            ));
        }
        if !(self.hi_hz < fps / 2.0) {
            return Err(Error::Nyquist {
                freq_hz: self.hi_hz,
                nyquist_hz: fps / 2.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandParams {
    pub epsilon: f64,
    pub f_min: f64,
    pub fps: f64,
    /// Spectral resolution `fps / N` of the measurement; the band is never narrower
    /// than two bins.
    pub bin_hz: f64,
}

/// Mean and population standard deviation.
pub fn band_statistics(freqs: &[f64]) -> Result<(f64, f64)> {
    if freqs.is_empty() {
        return Err(Error::Empty("feature frequencies"));
    }
    let n = freqs.len() as f64;
    let mu = freqs.iter().sum::<f64>() / n;
    let var = freqs.iter().map(|f| (f - mu) * (f - mu)).sum::<f64>() / n;
    Ok((mu, var.sqrt()))
}

/// `[μ - εσ, μ + εσ]` before any clamping.
pub fn symmetric_band(mu: f64, sigma: f64, epsilon: f64) -> (f64, f64) {
    (mu - epsilon * sigma, mu + epsilon * sigma)
}

/// Band `[μ - εσ, μ + εσ]` over the per-feature modal frequencies, widened to two
/// bins around μ when narrower, then clamped into `(f_min, fps/2)`.
pub fn select_band(freqs: &[f64], params: &BandParams) -> Result<FrequencyBand> {
    let BandParams {
        epsilon,
        f_min,
        fps,
        bin_hz,
    } = *params;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    if !(fps.is_finite() && fps > 0.0 && bin_hz.is_finite() && bin_hz > 0.0) {
        return Err(Error::param("fps", "fps and bin width must be positive"));
    }
    if !(f_min.is_finite() && f_min >= 0.0 && f_min < fps / 2.0) {
        return Err(Error::param("f_min", format!("must be in [0, fps/2), got {f_min}")));
    }
    let (mu, sigma) = band_statistics(freqs)?;
    let (mut lo, mut hi) = symmetric_band(mu, sigma, epsilon);
    let min_width = 2.0 * bin_hz;
    if hi - lo < min_width {
        lo = mu - bin_hz;
        hi = mu + bin_hz;
    }
    // Keep clear of the excluded DC/drift region and of Nyquist.
    let floor = f_min.max(0.5 * bin_hz);
    let ceil = fps / 2.0 - 0.5 * bin_hz;
    if lo < floor {
        lo = floor;
        hi = hi.max(lo + min_width);
    }
    if hi > ceil {
        hi = ceil;
        lo = lo.min(hi - min_width).max(floor);
    }
    if !(lo < hi) {
        return Err(Error::param(
            "band",
            format!("no room for a band around {mu} Hz"),
        ));
    }
    Ok(FrequencyBand {
        lo_hz: lo,
        hi_hz: hi,
        mu_hz: mu,
        sigma_hz: sigma,
        epsilon,
    })
}

/// Removes 2π jumps between consecutive samples in place.
pub fn unwrap_phase(series: &mut [f64]) {
    let mut offset = 0.0;
    let mut prev = match series.first() {
        Some(&p) => p,
        None => return,
    };
    for v in series.iter_mut().skip(1) {
        let raw = *v;
        let mut d = raw - prev;
        while d > PI {
            d -= 2.0 * PI;
            offset -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
            offset += 2.0 * PI;
        }
        prev = raw;
        *v = raw + offset;
    }
}

/// Zero-phase ideal band-pass: forward FFT, zero every bin outside
/// `[lo_hz, hi_hz]` (and DC), inverse FFT.
#[derive(Debug, Clone)]
pub struct Bandpass {
    plan: FftPlan,
    keep: Vec<bool>,
}

impl Bandpass {
    pub fn new(len: usize, lo_hz: f64, hi_hz: f64, fps: f64) -> Result<Self> {
        if len < MIN_SPECTRUM_LEN {
            return Err(Error::TooShort {
                len,
                min: MIN_SPECTRUM_LEN,
            });
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::param("fps", format!("must be positive, got {fps}")));
        }
        if !(lo_hz > 0.0 && lo_hz <= hi_hz && hi_hz <= fps / 2.0) {
            return Err(Error::param(
                "band",
                format!("[{lo_hz}, {hi_hz}] is not inside (0, {}]", fps / 2.0),
            ));
        }
        let bin = fps / len as f64;
        let keep = (0..len)
            .map(|k| {
                let f = k.min(len - k) as f64 * bin;
                k != 0 && f >= lo_hz && f <= hi_hz
            })
            .collect();
        Ok(Bandpass {
            plan: FftPlan::new(len),
            keep,
        })
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    /// Filters `series` into `out` using `scratch`; all three have the plan's length.
    pub fn apply_into(&self, series: &[f64], out: &mut [f64], scratch: &mut [Complex64]) {
        for (s, &x) in scratch.iter_mut().zip(series) {
            *s = Complex64::new(x, 0.0);
        }
        self.plan.forward(scratch);
        for (s, &k) in scratch.iter_mut().zip(&self.keep) {
            if !k {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        self.plan.inverse(scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = s.re;
        }
    }

    pub fn apply(&self, series: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.len()];
        self.apply_into(series, &mut out, &mut scratch);
        out
    }
}

/// Band-passes one per-pixel phase series. The input should already be unwrapped.
pub fn temporal_bandpass(series: &[f64], lo_hz: f64, hi_hz: f64, fps: f64) -> Result<Vec<f64>> {
    if series.len() != series.len().max(MIN_SPECTRUM_LEN) {
        return Err(Error::TooShort {
            len: series.len(),
            min: MIN_SPECTRUM_LEN,
        });
    }
    Ok(Bandpass::new(series.len(), lo_hz, hi_hz, fps)?.apply(series))
}

/// Amplifies motion inside `band` by `(1 + alpha)` within `roi`.
///
/// For both orientations the calibrated response `R` is phase-shifted by
/// `alpha·Δφ_band` and the change of its real part, divided by the G2 gain at the
/// pass-band peak, is added to the input. Pixels outside `roi` are copied unchanged;
/// output is clamped to `[0, 1]`.
pub fn magnify(
    seq: &FrameSequence,
    roi: Roi,
    band: &FrequencyBand,
    alpha: f64,
    filter: &FilterParams,
) -> Result<FrameSequence> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    band.check(seq.fps())?;
    let (w, h) = (seq.width(), seq.height());
    roi.check_inside(w, h)?;
    let n = seq.len();
    let bandpass = Bandpass::new(n, band.lo_hz, band.hi_hz, seq.fps())?;
    let bank = QuadratureBank::new(filter.sigma_px)?;
    let omega = 2.0 * PI * bank.horizontal.peak_frequency();
    let even_gain = bank.horizontal.even_gain(omega);
    // Rescales H2 so both halves of the pair have equal gain at the peak.
    let odd_scale = even_gain / bank.horizontal.odd_gain(omega);
    let recon_gain = 1.0 / even_gain;
    let frames = seq.frames();
    let px = roi.area();

    // Pass 1: local phase per ROI pixel and frame, time-major.
    let phases = crate::par::map_range(n, |t| -> Result<[Vec<f64>; 2]> {
        let mut out = [vec![0.0; px], vec![0.0; px]];
        for (o, kernel) in [&bank.horizontal, &bank.vertical].into_iter().enumerate() {
            let r = analyze_region(&frames[t], kernel, roi, filter.amplitude_floor_rel)?;
            for (i, ((&re, &im), &ok)) in r.re().iter().zip(r.im()).zip(r.valid()).enumerate() {
                out[o][i] = if ok { (odd_scale * im).atan2(re) } else { f64::NAN };
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    // Per pixel: unwrap, band-pass, scale. Layout becomes pixel-major.
    let mut shifts = vec![0.0; 2 * px * n];
    crate::par::for_each_chunk_mut(&mut shifts, n, |chunk, out| {
        let (o, i) = (chunk / px, chunk % px);
        let mut series: Vec<f64> = phases.iter().map(|p| p[o][i]).collect();
        if series.iter().any(|v| v.is_nan()) {
            // Phase is undefined in at least one frame; leave the pixel untouched.
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        unwrap_phase(&mut series);
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        bandpass.apply_into(&series, out, &mut scratch);
        out.iter_mut().for_each(|v| *v *= alpha);
    });
    drop(phases);

    // Pass 2: re-filter each frame and rebuild the ROI.
    let out_frames = crate::par::map_range(n, |t| -> Result<Frame> {
        let mut frame = frames[t].clone();
        let mut delta = vec![0.0; px];
        for (o, kernel) in [&bank.horizontal, &bank.vertical].into_iter().enumerate() {
            let r = analyze_region(&frames[t], kernel, roi, filter.amplitude_floor_rel)?;
            for (i, (&re, &im)) in r.re().iter().zip(r.im()).enumerate() {
                let psi = shifts[(o * px + i) * n + t];
                let (s, c) = psi.sin_cos();
                // Re(R·e^{iψ}) - Re(R) with R = re + i·odd_scale·im
                delta[i] += re * (c - 1.0) - odd_scale * im * s;
            }
        }
        for (i, d) in delta.iter().enumerate() {
            let (x, y) = (roi.x0 + i % roi.width, roi.y0 + i / roi.width);
            let v = frame.get(x, y) as f64 + recon_gain * d;
            frame.set(x, y, v.clamp(0.0, 1.0) as f32);
        }
        Ok(frame)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(out_frames, seq.fps(), seq.scale_mm_per_px())
}

/// Amplification band of one ROI-level mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBand {
    pub mode: ModeEstimate,
    pub axis: Axis,
    pub band: FrequencyBand,
    /// Modal frequency found at each contributing feature point.
    pub feature_freqs: Vec<f64>,
}

/// Frequency bands for the modes of a region.
///
/// Modes are picked on the spectrum of the mean signal. Each feature point then
/// contributes the strongest bin of its own spectrum inside the mode's cell, the
/// range halfway to the neighbouring modes. The band follows from those per-feature
/// frequencies via [`select_band`].
pub fn mode_bands(
    signals: &SignalMap,
    pick: &ModePickParams,
    epsilon: f64,
    window: Window,
) -> Result<Vec<ModeBand>> {
    let (axis, spectrum) = mean_spectrum(signals, pick.f_min, window)?;
    let modes = pick_modes(&spectrum, pick);
    let nyquist = spectrum.fps / 2.0;
    let list: Vec<&crate::displacement::DisplacementSignal> = signals.values().collect();
    let spectra = crate::par::map_range(list.len(), |i| {
        fft_spectrum(list[i].axis(axis), list[i].fps, window)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut by_freq: Vec<f64> = modes.iter().map(|m| m.freq_hz).collect();
    by_freq.sort_by(f64::total_cmp);
    let params = BandParams {
        epsilon,
        f_min: pick.f_min,
        fps: spectrum.fps,
        bin_hz: spectrum.bin_hz(),
    };
    let mut out = Vec::with_capacity(modes.len());
    for mode in modes {
        let i = by_freq.iter().position(|&f| f == mode.freq_hz).unwrap_or(0);
        let lo = if i == 0 {
            pick.f_min
        } else {
            0.5 * (by_freq[i - 1] + mode.freq_hz)
        };
        let hi = by_freq
            .get(i + 1)
            .map_or(nyquist, |&next| 0.5 * (mode.freq_hz + next));
        let feature_freqs: Vec<f64> = spectra
            .iter()
            .filter_map(|s| {
                let mut best: Option<(f64, f64)> = None;
                for (&f, &m) in s.freqs_hz.iter().zip(&s.mag) {
                    if f > lo && f < hi && best.is_none_or(|(_, bm)| m > bm) {
                        best = Some((f, m));
                    }
                }
                best.map(|(f, _)| f)
            })
            .collect();
        let band = select_band(&feature_freqs, &params)?;
        out.push(ModeBand {
            mode,
            axis,
            band,
            feature_freqs,
        });
    }
    Ok(out)
}

/// Normalised operating deflection shape along an ordered line of points.
#[derive(Debug, Clone, PartialEq)]
pub struct OdsProfile {
    pub positions: Vec<Point>,
    /// Signed deflection per position, scaled so the largest magnitude is 1.
    pub values: Vec<f64>,
    /// Axis the deflection is measured along.
    pub axis: Axis,
    pub reference_index: usize,
    pub band_center_hz: f64,
}

/// Deflection of each point at the band centre frequency.
///
/// Each point's displacement is projected on `exp(-2πi·f_c·t)`. The axis with the
/// larger total response is used. Values are signed by their phase relative to the
/// strongest point and divided by its magnitude.
pub fn extract_ods(
    seq: &FrameSequence,
    line: &[Point],
    band: &FrequencyBand,
    filter: &FilterParams,
) -> Result<OdsProfile> {
    if line.len() < 3 {
        return Err(Error::param(
            "line",
            format!("need at least 3 points, got {}", line.len()),
        ));
    }
    check_ordered(line)?;
    band.check(seq.fps())?;
    let signals = point_signals(seq, line, filter)?;
    let fc = band.center_hz();
    let component = |s: &[f64]| -> Complex64 {
        let w = -2.0 * PI * fc / seq.fps();
        detrend_mean(s)
            .iter()
            .enumerate()
            .map(|(t, v)| Complex64::from_polar(*v, w * t as f64))
            .sum()
    };
    let cx: Vec<Complex64> = signals.iter().map(|s| component(&s.dx)).collect();
    let cy: Vec<Complex64> = signals.iter().map(|s| component(&s.dy)).collect();
    let energy = |c: &[Complex64]| c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let (axis, comps) = if energy(&cy) > energy(&cx) {
        (Axis::Y, cy)
    } else {
        (Axis::X, cx)
    };
    let mut reference_index = 0;
    for (i, c) in comps.iter().enumerate() {
        if c.norm() > comps[reference_index].norm() {
            reference_index = i;
        }
    }
    let reference = comps[reference_index];
    let ref_mag = reference.norm();
    if !(ref_mag > 0.0) {
        return Err(Error::ZeroAmplitude);
    }
    let values = comps
        .iter()
        .map(|c| {
            let sign = if (c * reference.conj()).re < 0.0 { -1.0 } else { 1.0 };
            sign * c.norm() / ref_mag
        })
        .collect();
    Ok(OdsProfile {
        positions: line.to_vec(),
        values,
        axis,
        reference_index,
        band_center_hz: fc,
    })
}

/// Points must advance strictly along the first-to-last direction.
fn check_ordered(line: &[Point]) -> Result<()> {
    let (a, b) = (line[0], line[line.len() - 1]);
    let dir = (b.x as f64 - a.x as f64, b.y as f64 - a.y as f64);
    let proj = |p: &Point| p.x as f64 * dir.0 + p.y as f64 * dir.1;
    if line.windows(2).all(|w| proj(&w[1]) > proj(&w[0])) {
        Ok(())
    } else {
        Err(Error::param("line", "points are not strictly ordered along the line"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BandParams {
        BandParams {
            epsilon: 2.0,
            f_min: 0.3,
            fps: 60.0,
            bin_hz: 0.1,
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(select_band(&[], &params()), Err(Error::Empty(_))));
    }

    #[test]
    fn equal_frequencies_widen_to_two_bins() {
        let b = select_band(&[2.7; 5], &params()).unwrap();
        assert!((b.lo_hz - 2.6).abs() < 1e-12);
        assert!((b.hi_hz - 2.8).abs() < 1e-12);
        assert_eq!(b.sigma_hz, 0.0);
    }

    #[test]
    fn band_is_clamped_above_f_min() {
        let b = select_band(&[0.2, 0.6], &params()).unwrap();
        assert!(b.lo_hz >= 0.3);
        assert!(b.hi_hz - b.lo_hz >= 0.2 - 1e-12);
    }

    #[test]
    fn band_is_clamped_below_nyquist() {
        let b = select_band(&[29.0, 29.9], &params()).unwrap();
        assert!(b.hi_hz < 30.0);
        b.check(60.0).unwrap();
    }

    #[test]
    fn unwrap_removes_jumps() {
        let truth: Vec<f64> = (0..50).map(|i| 0.4 * i as f64).collect();
        let mut wrapped: Vec<f64> = truth
            .iter()
            .map(|v| (v + PI).rem_euclid(2.0 * PI) - PI)
            .collect();
        unwrap_phase(&mut wrapped);
        for (a, b) in wrapped.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bandpass_rejects_bad_bands() {
        assert!(temporal_bandpass(&[0.0; 32], 1.0, 2.0, 60.0).is_err());
        assert!(temporal_bandpass(&[0.0; 128], 0.0, 2.0, 60.0).is_err());
        assert!(temporal_bandpass(&[0.0; 128], 1.0, 31.0, 60.0).is_err());
    }

    #[test]
    fn ordered_line_check() {
        let ok = [Point::new(1, 5), Point::new(3, 5), Point::new(9, 5)];
        assert!(check_ordered(&ok).is_ok());
        let bad = [Point::new(1, 5), Point::new(9, 5), Point::new(3, 5)];
        assert!(check_ordered(&bad).is_err());
    }

    #[test]
    fn manual_band_validation() {
        assert!(FrequencyBand::manual(2.0, 1.0).is_err());
        let b = FrequencyBand::manual(1.5, 2.5).unwrap();
        assert!(b.check(60.0).is_ok());
        assert!(b.check(4.0).is_err());
    }
}
