//! Magnitude spectra, SNR-ranked mode picking, NRMSE and resampling.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::fft::fft_real;
use crate::{Error, Result};

/// Shortest series accepted by the spectral routines.
pub const MIN_SPECTRUM_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

/// One-sided magnitude spectrum; `mag[k] = |X_k|` of the unnormalised DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub mag: Vec<f64>,
    pub fps: f64,
    pub n_samples: usize,
    pub window: Window,
}

impl Spectrum {
    pub fn bin_hz(&self) -> f64 {
        self.fps / self.n_samples as f64
    }

    /// `(1/N)·Σ|X_k|²` over the two-sided spectrum, i.e. the time-domain energy of
    /// the (detrended, windowed) input.
    pub fn energy(&self) -> f64 {
        let n = self.n_samples;
        let mut e = 0.0;
        for (k, m) in self.mag.iter().enumerate() {
            let mirrored = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            e += if mirrored { 2.0 } else { 1.0 } * m * m;
        }
        e / n as f64
    }

    /// Bin with the largest magnitude strictly above `f_min` and below Nyquist.
    /// Ties resolve to the lower frequency.
    pub fn dominant(&self, f_min: f64) -> Option<(f64, f64)> {
        let nyquist = self.fps / 2.0;
        let mut best: Option<(f64, f64)> = None;
        for (&f, &m) in self.freqs_hz.iter().zip(&self.mag) {
            if f <= f_min || f >= nyquist {
                continue;
            }
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((f, m));
            }
        }
        best
    }
}

/// Subtracts the mean.
pub fn detrend_mean(signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    signal.iter().map(|v| v - mean).collect()
}

fn check_rate(name: &'static str, rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {rate}")))
    }
}

/// Mean-detrends `signal`, applies `window` and returns the one-sided magnitude
/// spectrum with bins at `k·fps/N`, `k = 0..=N/2`.
pub fn fft_spectrum(signal: &[f64], fps: f64, window: Window) -> Result<Spectrum> {
    check_rate("fps", fps)?;
    let n = signal.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::TooShort {
            len: n,
            min: MIN_SPECTRUM_LEN,
        });
    }
    let mut x = detrend_mean(signal);
    if window == Window::Hann {
        for (i, v) in x.iter_mut().enumerate() {
            *v *= 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
        }
    }
    let spectrum = fft_real(&x);
    let half = n / 2;
    let bin = fps / n as f64;
    Ok(Spectrum {
        freqs_hz: (0..=half).map(|k| k as f64 * bin).collect(),
        mag: spectrum[..=half].iter().map(|c| c.norm()).collect(),
        fps,
        n_samples: n,
        window,
    })
}

/// A spectral peak ranked by SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEstimate {
    /// 1-based, in decreasing SNR.
    pub rank: usize,
    pub freq_hz: f64,
    pub magnitude: f64,
    /// Peak magnitude over the median magnitude of the whole spectrum.
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePickParams {
    pub max_modes: usize,
    /// Peaks at or below this frequency are ignored.
    pub f_min: f64,
    /// Accepted peaks are at least this far apart.
    pub min_sep_hz: f64,
    /// Peaks below this fraction of the strongest candidate are ignored. Keeps
    /// round-off ripple and leakage interference from counting as modes.
    pub min_rel_magnitude: f64,
}

impl Default for ModePickParams {
    fn default() -> Self {
        ModePickParams {
            max_modes: 4,
            f_min: 0.3,
            min_sep_hz: 0.2,
            min_rel_magnitude: 0.05,
        }
    }
}

/// Local maxima of `spectrum` in `(f_min, fps/2)`, ranked by SNR, greedily thinned
/// so no two accepted peaks are closer than `min_sep_hz`, truncated to `max_modes`.
/// SNR ties go to the lower frequency.
pub fn pick_modes(spectrum: &Spectrum, params: &ModePickParams) -> Vec<ModeEstimate> {
    let mag = &spectrum.mag;
    if mag.len() < 3 || params.max_modes == 0 {
        return Vec::new();
    }
    let mut sorted = mag.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let peak = sorted[sorted.len() - 1];
    let floor = median.max(peak * f64::EPSILON).max(f64::MIN_POSITIVE);

    let nyquist = spectrum.fps / 2.0;
    let mut candidates: Vec<(f64, f64, f64)> = Vec::new();
    for k in 1..mag.len() - 1 {
        let f = spectrum.freqs_hz[k];
        if f <= params.f_min || f >= nyquist {
            continue;
        }
        if mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] {
            let snr = mag[k] / floor;
            if snr > 1.0 {
                candidates.push((f, mag[k], snr));
            }
        }
    }
    let strongest = candidates.iter().map(|c| c.1).fold(0.0, f64::max);
    candidates.retain(|c| c.1 >= params.min_rel_magnitude * strongest);
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.total_cmp(&b.0)));

    let mut picked: Vec<ModeEstimate> = Vec::new();
    for (f, m, snr) in candidates {
        if picked.len() == params.max_modes {
            break;
        }
        if picked
            .iter()
            .all(|p| (p.freq_hz - f).abs() >= params.min_sep_hz)
        {
            picked.push(ModeEstimate {
                rank: picked.len() + 1,
                freq_hz: f,
                magnitude: m,
                snr,
            });
        }
    }
    picked
}

/// `100 · RMS(test - reference) / (max(reference) - min(reference))`, in percent.
pub fn nrmse(test: &[f64], reference: &[f64]) -> Result<f64> {
    if test.len() != reference.len() {
        return Err(Error::param(
            "test",
            format!(
                "length {} differs from reference length {}",
                test.len(),
                reference.len()
            ),
        ));
    }
    if reference.is_empty() {
        return Err(Error::Empty("reference signal"));
    }
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::FlatReference);
    }
    let mse = test
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(100.0 * mse.sqrt() / range)
}

/// Linear interpolation from `from_rate` onto a `to_rate` grid starting at t = 0 and
/// covering the input's time span.
pub fn resample(signal: &[f64], from_rate: f64, to_rate: f64) -> Result<Vec<f64>> {
    check_rate("from_rate", from_rate)?;
    check_rate("to_rate", to_rate)?;
    let n = signal.len();
    if n < 2 {
        return Ok(signal.to_vec());
    }
    let ratio = from_rate / to_rate;
    let last = (n - 1) as f64;
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let pos = j as f64 * ratio;
        if pos > last * (1.0 + 1e-12) {
            break;
        }
        let pos = pos.min(last);
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        let v = if i + 1 < n {
            signal[i] * (1.0 - frac) + signal[i + 1] * frac
        } else {
            signal[i]
        };
        out.push(v);
        j += 1;
    }
    Ok(out)
}

/// Least-squares fit of `a·cos(ωt) + b·sin(ωt) + c` at a known frequency; returns
/// the amplitude `√(a² + b²)`.
pub fn sinusoid_amplitude(signal: &[f64], fps: f64, freq_hz: f64) -> f64 {
    let w = 2.0 * PI * freq_hz / fps;
    // Normal equations for the basis [cos, sin, 1].
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (t, &y) in signal.iter().enumerate() {
        let (s, c) = (w * t as f64).sin_cos();
        let basis = [c, s, 1.0];
        for i in 0..3 {
            rhs[i] += basis[i] * y;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    match solve3(m, rhs) {
        Some([a, b, _]) => a.hypot(b),
        None => 0.0,
    }
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
