//! G2/H2 steerable quadrature filters and per-pixel local amplitude / phase.
//!
//! Both kernels are separable: a 1-D profile along the steering axis (second
//! derivative of a Gaussian for G2, an odd cubic-times-Gaussian for H2) times a 1-D
//! Gaussian across it. Phase increases along the steering axis, so a pattern moving
//! towards +x lowers the phase at a fixed pixel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use crate::features::Roi;
use crate::{Error, Frame, Result};

/// Linear coefficient of the H2 cubic `(u^3 - c u)`.
pub const H2_LINEAR_COEFF: f64 = 2.2231;
/// Envelope exponent of H2, `exp(-k u^2)`. Slightly wider than G2's so the two
/// magnitude responses agree around the pass-band peak.
pub const H2_ENVELOPE: f64 = 0.8257;

/// Default filter scale in pixels.
pub const DEFAULT_SIGMA_PX: f64 = 2.0;

/// Steering direction of a kernel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// θ = 0, phase varies along x.
    Horizontal,
    /// θ = π/2, phase varies along y.
    Vertical,
}

impl Orientation {
    pub const BOTH: [Orientation; 2] = [Orientation::Horizontal, Orientation::Vertical];

    pub fn theta(self) -> f64 {
        match self {
            Orientation::Horizontal => 0.0,
            Orientation::Vertical => FRAC_PI_2,
        }
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        if theta.abs() < 1e-9 {
            Ok(Orientation::Horizontal)
        } else if (theta - FRAC_PI_2).abs() < 1e-9 {
            Ok(Orientation::Vertical)
        } else {
            Err(Error::param(
                "theta",
                format!("only 0 and pi/2 are supported, got {theta}"),
            ))
        }
    }
}

/// Tunables shared by every stage that filters frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub sigma_px: f64,
    /// Amplitude floor relative to `frame range * ||g2||_1`.
    pub amplitude_floor_rel: f64,
    /// Minimum `|dphi/ds|` in rad/px for a velocity to be trusted.
    pub slope_floor: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            sigma_px: DEFAULT_SIGMA_PX,
            amplitude_floor_rel: 1e-4,
            slope_floor: 0.02,
        }
    }
}

/// G2/H2 pair steered to one orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPair {
    orientation: Orientation,
    sigma_px: f64,
    radius: usize,
    /// G2 profile along the steering axis (normalisation folded in).
    even: Vec<f64>,
    /// H2 profile along the steering axis (normalisation folded in).
    odd: Vec<f64>,
    /// Gaussian across the steering axis.
    smooth: Vec<f64>,
}

/// Builds the quadrature pair at scale `sigma_px` for `theta ∈ {0, π/2}`.
///
/// Taps are `2·ceil(4σ)+1`. The G2 profile is mean-subtracted (zero DC) and both
/// 2-D kernels are scaled to unit L2 norm.
pub fn make_quadrature_kernels(sigma_px: f64, theta: f64) -> Result<KernelPair> {
    if !(sigma_px.is_finite() && sigma_px > 0.0) {
        return Err(Error::param(
            "sigma_px",
            format!("must be positive, got {sigma_px}"),
        ));
    }
    let orientation = Orientation::from_theta(theta)?;
    let radius = (4.0 * sigma_px).ceil() as usize;
    let taps = 2 * radius + 1;
    let u = |i: usize| (i as f64 - radius as f64) / (SQRT_2 * sigma_px);

    let smooth: Vec<f64> = (0..taps).map(|i| (-u(i) * u(i)).exp()).collect();
    let mut even: Vec<f64> = (0..taps)
        .map(|i| {
            let u2 = u(i) * u(i);
            (1.0 - 2.0 * u2) * (-u2).exp()
        })
        .collect();
    let mean = even.iter().sum::<f64>() / taps as f64;
    even.iter_mut().for_each(|v| *v -= mean);
    let mut odd: Vec<f64> = (0..taps)
        .map(|i| {
            let x = u(i);
            (x * x * x - H2_LINEAR_COEFF * x) * (-H2_ENVELOPE * x * x).exp()
        })
        .collect();

    let smooth_norm = l2(&smooth);
    let even_scale = 1.0 / (l2(&even) * smooth_norm);
    let odd_scale = 1.0 / (l2(&odd) * smooth_norm);
    even.iter_mut().for_each(|v| *v *= even_scale);
    odd.iter_mut().for_each(|v| *v *= odd_scale);

    Ok(KernelPair {
        orientation,
        sigma_px,
        radius,
        even,
        odd,
        smooth,
    })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl KernelPair {
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn theta(&self) -> f64 {
        self.orientation.theta()
    }

    pub fn sigma_px(&self) -> f64 {
        self.sigma_px
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn taps(&self) -> usize {
        2 * self.radius + 1
    }

    /// Width of the always-invalid frame border, `ceil(taps / 2)`.
    pub fn border(&self) -> usize {
        self.radius + 1
    }

    fn outer(&self, along: &[f64]) -> Vec<f64> {
        let n = self.taps();
        let mut k = vec![0.0; n * n];
        for row in 0..n {
            for col in 0..n {
                k[row * n + col] = match self.orientation {
                    Orientation::Horizontal => self.smooth[row] * along[col],
                    Orientation::Vertical => along[row] * self.smooth[col],
                };
            }
        }
        k
    }

    /// Dense G2 kernel, `taps × taps`, row-major (row = y offset).
    pub fn g2(&self) -> Vec<f64> {
        self.outer(&self.even)
    }

    /// Dense H2 kernel, `taps × taps`, row-major (row = y offset).
    pub fn h2(&self) -> Vec<f64> {
        self.outer(&self.odd)
    }

    /// `||g2||_1`.
    pub fn g2_l1(&self) -> f64 {
        self.even.iter().map(|v| v.abs()).sum::<f64>() * self.smooth.iter().sum::<f64>()
    }

    /// Nominal pass-band peak of G2 in cycles per pixel, `√2 / (2πσ)`.
    pub fn peak_frequency(&self) -> f64 {
        SQRT_2 / (2.0 * PI * self.sigma_px)
    }

    /// Response of G2 to a unit grating `cos(ω s)` along the steering axis.
    pub fn even_gain(&self, omega: f64) -> f64 {
        self.profile_gain(&self.even, |a| a.cos(), omega)
    }

    /// Response of H2 to a unit grating `sin(ω s)` along the steering axis, sign
    /// flipped so it is positive in the pass band.
    pub fn odd_gain(&self, omega: f64) -> f64 {
        -self.profile_gain(&self.odd, |a| a.sin(), omega)
    }

    fn profile_gain(&self, profile: &[f64], f: impl Fn(f64) -> f64, omega: f64) -> f64 {
        let r = self.radius as f64;
        let along: f64 = profile
            .iter()
            .enumerate()
            .map(|(i, k)| k * f(omega * (i as f64 - r)))
            .sum();
        along * self.smooth.iter().sum::<f64>()
    }
}

/// Both orientations at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBank {
    pub horizontal: KernelPair,
    pub vertical: KernelPair,
}

impl QuadratureBank {
    pub fn new(sigma_px: f64) -> Result<Self> {
        Ok(QuadratureBank {
            horizontal: make_quadrature_kernels(sigma_px, 0.0)?,
            vertical: make_quadrature_kernels(sigma_px, FRAC_PI_2)?,
        })
    }

    pub fn get(&self, orientation: Orientation) -> &KernelPair {
        match orientation {
            Orientation::Horizontal => &self.horizontal,
            Orientation::Vertical => &self.vertical,
        }
    }
}

/// Complex filter response over a rectangle of a frame.
///
/// `region` is in frame coordinates; `re`, `im` and `valid` are row-major over it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResponse {
    orientation: Orientation,
    frame_width: usize,
    frame_height: usize,
    region: Roi,
    re: Vec<f64>,
    im: Vec<f64>,
    valid: Vec<bool>,
    amplitude_floor: f64,
}

impl QuadratureResponse {
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn region(&self) -> Roi {
        self.region
    }

    pub fn frame_size(&self) -> (usize, usize) {
        (self.frame_width, self.frame_height)
    }

    pub fn amplitude_floor(&self) -> f64 {
        self.amplitude_floor
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(self.region.contains(x, y));
        (y - self.region.y0) * self.region.width + (x - self.region.x0)
    }

    /// Response at frame pixel `(x, y)`, which must lie inside the region.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Complex64 {
        let i = self.index(x, y);
        Complex64::new(self.re[i], self.im[i])
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn amplitude(&self, x: usize, y: usize) -> f64 {
        self.at(x, y).norm()
    }

    /// Local phase in `(-π, π]`.
    /// Local phase in `(-π, π]`.
    pub fn phase(&self, x: usize, y: usize) -> f64 {
        let r = self.at(x, y);
        let p = r.im.atan2(r.re);
        if p <= -PI {
            PI
        } else {
            p
        }
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
}

/// Filters a whole frame. Pixels in the `ceil(taps/2)` border and pixels whose
/// amplitude is at or below the floor are marked invalid.
pub fn analyze_frame(frame: &Frame, kernel: &KernelPair) -> Result<QuadratureResponse> {
    analyze_region(
        frame,
        kernel,
        Roi::full(frame.width(), frame.height()),
        FilterParams::default().amplitude_floor_rel,
    )
}

/// Filters the pixels of `region` only. Neighbourhoods still read the whole frame
/// with reflected borders, so values match [`analyze_frame`] exactly.
pub fn analyze_region(
    frame: &Frame,
    kernel: &KernelPair,
    region: Roi,
    amplitude_floor_rel: f64,
) -> Result<QuadratureResponse> {
    let (w, h) = (frame.width(), frame.height());
    let taps = kernel.taps();
    if w < taps || h < taps {
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
            taps,
        });
    }
    region.check_inside(w, h)?;
    let r = kernel.radius;
    let (rw, rh) = (region.width, region.height);
    let mut re = vec![0.0; rw * rh];
    let mut im = vec![0.0; rw * rh];

    match kernel.orientation {
        Orientation::Horizontal => {
            // Smooth down the columns, then run the steered profiles along rows.
            let cols: Vec<usize> = (0..rw + 2 * r)
                .map(|i| reflect(region.x0 as isize + i as isize - r as isize, w))
                .collect();
            let mut tmp = vec![0.0; cols.len()];
            for oy in 0..rh {
                let y = region.y0 + oy;
                tmp.iter_mut().for_each(|v| *v = 0.0);
                for (v, &k) in kernel.smooth.iter().enumerate() {
                    let row = frame.row(reflect(y as isize + v as isize - r as isize, h));
                    for (t, &c) in tmp.iter_mut().zip(&cols) {
                        *t += k * row[c] as f64;
                    }
                }
                let out = oy * rw;
                for ox in 0..rw {
                    let window = &tmp[ox..ox + 2 * r + 1];
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for ((&s, &e), &o) in window.iter().zip(&kernel.even).zip(&kernel.odd) {
                        a += e * s;
                        b += o * s;
                    }
                    re[out + ox] = a;
                    im[out + ox] = b;
                }
            }
        }
        Orientation::Vertical => {
            // Smooth along rows, then run the steered profiles down the columns.
            let rows = rh + 2 * r;
            let mut tmp = vec![0.0; rows * rw];
            for i in 0..rows {
                let y = reflect(region.y0 as isize + i as isize - r as isize, h);
                let row = frame.row(y);
                let dst = &mut tmp[i * rw..(i + 1) * rw];
                for (ox, d) in dst.iter_mut().enumerate() {
                    let x = region.x0 + ox;
                    let mut acc = 0.0;
                    for (u, &k) in kernel.smooth.iter().enumerate() {
                        acc += k * row[reflect(x as isize + u as isize - r as isize, w)] as f64;
                    }
                    *d = acc;
                }
            }
            for oy in 0..rh {
                let out = oy * rw;
                for (v, (&e, &o)) in kernel.even.iter().zip(&kernel.odd).enumerate() {
                    let src = &tmp[(oy + v) * rw..(oy + v + 1) * rw];
                    for ox in 0..rw {
                        re[out + ox] += e * src[ox];
                        im[out + ox] += o * src[ox];
                    }
                }
            }
        }
    }

    let (lo, hi) = frame.range();
    let max_abs = lo.abs().max(hi.abs()) as f64;
    let l1 = kernel.g2_l1();
    let amplitude_floor =
        (amplitude_floor_rel * (hi - lo) as f64 * l1).max(f64::EPSILON * max_abs * l1);
    let border = kernel.border();
    let mut valid = vec![false; rw * rh];
    for oy in 0..rh {
        let y = region.y0 + oy;
        if y < border || y + border >= h {
            continue;
        }
        for ox in 0..rw {
            let x = region.x0 + ox;
            if x < border || x + border >= w {
                continue;
            }
            let i = oy * rw + ox;
            valid[i] = re[i].hypot(im[i]) > amplitude_floor;
        }
    }

    Ok(QuadratureResponse {
        orientation: kernel.orientation,
        frame_width: w,
        frame_height: h,
        region,
        re,
        im,
        valid,
        amplitude_floor,
    })
}

/// Mirror index without repeating the edge sample (`-1 -> 1`, `n -> n - 2`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    i as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grating(w: usize, h: usize, omega: f64, shift: f64, amp: f64) -> Frame {
        Frame::from_fn(w, h, |x, _| {
            (0.5 + amp * (omega * (x as f64 - shift)).sin()) as f32
        })
    }

    #[test]
    fn rejects_bad_sigma_and_theta() {
        assert!(make_quadrature_kernels(0.0, 0.0).is_err());
        assert!(make_quadrature_kernels(-1.0, 0.0).is_err());
        assert!(make_quadrature_kernels(2.0, 0.3).is_err());
    }

    #[test]
    fn default_scale_gives_17_taps() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        assert_eq!(k.taps(), 17);
        assert_eq!(k.border(), 9);
    }

    #[test]
    fn kernels_have_zero_dc_and_unit_norm() {
        for sigma in [1.0, 1.5, 2.0, 3.3] {
            for theta in [0.0, FRAC_PI_2] {
                let k = make_quadrature_kernels(sigma, theta).unwrap();
                for dense in [k.g2(), k.h2()] {
                    let sum: f64 = dense.iter().sum();
                    let l1: f64 = dense.iter().map(|v| v.abs()).sum();
                    let l2: f64 = dense.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(sum.abs() <= 1e-10 * l1, "sum {sum}");
                    assert!((l2 - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetry_and_steering() {
        let k0 = make_quadrature_kernels(2.0, 0.0).unwrap();
        let k90 = make_quadrature_kernels(2.0, FRAC_PI_2).unwrap();
        let n = k0.taps();
        let (g0, h0, g90, h90) = (k0.g2(), k0.h2(), k90.g2(), k90.h2());
        for row in 0..n {
            for col in 0..n {
                let mirrored = (n - 1 - row) * n + (n - 1 - col);
                let i = row * n + col;
                assert_eq!(g0[i], g0[mirrored]);
                assert_eq!(h0[i], -h0[mirrored]);
                assert_eq!(g90[i], g90[mirrored]);
                assert_eq!(h90[i], -h90[mirrored]);
                // transpose
                assert_eq!(g90[i], g0[col * n + row]);
                assert_eq!(h90[i], h0[col * n + row]);
            }
        }
        // even in x, Gaussian-shaped (positive, peaked at centre) in y
        let c = n / 2;
        for row in 0..c {
            assert!(g0[row * n + c] < g0[(row + 1) * n + c]);
            assert!(g0[row * n + c] > 0.0);
        }
    }

    #[test]
    fn constant_frame_is_all_invalid() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        let f = Frame::filled(40, 40, 0.7);
        let r = analyze_frame(&f, &k).unwrap();
        assert!(r.valid().iter().all(|v| !v));
        for y in 0..40 {
            for x in 0..40 {
                assert!(r.amplitude(x, y) < 1e-12);
            }
        }
    }

    #[test]
    fn frame_smaller_than_kernel_is_rejected() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        let f = Frame::filled(16, 40, 0.5);
        assert!(matches!(
            analyze_frame(&f, &k),
            Err(Error::FrameTooSmall { .. })
        ));
    }

    #[test]
    fn border_is_always_invalid() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        let omega = SQRT_2 / 2.0;
        let r = analyze_frame(&grating(48, 40, omega, 0.0, 0.3), &k).unwrap();
        for y in 0..40 {
            for x in 0..48 {
                let inner = (9..39).contains(&x) && (9..31).contains(&y);
                assert_eq!(r.is_valid(x, y), inner, "({x},{y})");
            }
        }
    }

    #[test]
    fn region_matches_full_frame() {
        let k = make_quadrature_kernels(2.0, FRAC_PI_2).unwrap();
        let f = Frame::from_fn(50, 45, |x, y| {
            (0.5 + 0.2 * (0.3 * x as f64 + 0.7 * y as f64).sin()) as f32
        });
        let full = analyze_frame(&f, &k).unwrap();
        let roi = Roi::new(3, 10, 20, 30);
        let part = analyze_region(&f, &k, roi, 1e-4).unwrap();
        for y in 10..40 {
            for x in 3..23 {
                assert_eq!(full.at(x, y), part.at(x, y));
            }
        }
    }

    #[test]
    fn scaling_input_scales_amplitude_and_keeps_phase() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        let f = Frame::from_fn(40, 40, |x, y| {
            (0.5 + 0.2 * (0.6 * x as f64).sin() * (0.2 * y as f64).cos()) as f32
        });
        let scaled = Frame::new(40, 40, f.data().iter().map(|v| v * 0.5).collect()).unwrap();
        let a = analyze_frame(&f, &k).unwrap();
        let b = analyze_frame(&scaled, &k).unwrap();
        for y in 0..40 {
            for x in 0..40 {
                if a.is_valid(x, y) {
                    assert!(b.is_valid(x, y));
                    assert!((b.amplitude(x, y) - 0.5 * a.amplitude(x, y)).abs() < 1e-14);
                    assert!((b.phase(x, y) - a.phase(x, y)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn gains_agree_near_peak() {
        let k = make_quadrature_kernels(2.0, 0.0).unwrap();
        let w0 = 2.0 * PI * k.peak_frequency();
        let ratio = k.odd_gain(w0) / k.even_gain(w0);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }
}
