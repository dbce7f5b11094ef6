//! Complex FFT for any length: iterative radix-2 for powers of two, Bluestein's
//! chirp-z reduction otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

/// A reusable transform plan for one length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Radix2(Radix2),
    Bluestein {
        inner: Radix2,
        /// `exp(-i pi k^2 / n)` for `k < n`.
        chirp: Vec<Complex64>,
        /// Forward transform of the conjugate chirp, wrapped to the inner length.
        chirp_spectrum: Vec<Complex64>,
    },
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    /// `exp(-2 pi i k / len)` for `k < len / 2`.
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Radix2 { len, twiddles }
    }

    fn forward(&self, data: &mut [Complex64]) {
        let n = self.len;
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let step = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let kind = if len.is_power_of_two() || len <= 1 {
            Kind::Radix2(Radix2::new(len.max(1)))
        } else {
            let m = (2 * len - 1).next_power_of_two();
            let inner = Radix2::new(m);
            let two_n = 2 * len as u128;
            let chirp: Vec<Complex64> = (0..len)
                .map(|k| {
                    // k^2 mod 2n keeps the angle small and exact.
                    let q = ((k as u128 * k as u128) % two_n) as f64;
                    let a = -PI * q / len as f64;
                    Complex64::new(a.cos(), a.sin())
                })
                .collect();
            let mut b = vec![Complex64::new(0.0, 0.0); m];
            b[0] = chirp[0].conj();
            for k in 1..len {
                b[k] = chirp[k].conj();
                b[m - k] = chirp[k].conj();
            }
            inner.forward(&mut b);
            Kind::Bluestein {
                inner,
                chirp,
                chirp_spectrum: b,
            }
        };
        FftPlan { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalised forward transform, `X_k = sum_n x_n exp(-2 pi i k n / N)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len, "FFT length mismatch");
        match &self.kind {
            Kind::Radix2(r) => r.forward(data),
            Kind::Bluestein {
                inner,
                chirp,
                chirp_spectrum,
            } => {
                let m = inner.len;
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                for ((dst, &x), &w) in a.iter_mut().zip(data.iter()).zip(chirp) {
                    *dst = x * w;
                }
                inner.forward(&mut a);
                for (x, &b) in a.iter_mut().zip(chirp_spectrum) {
                    *x = (*x * b).conj();
                }
                // Inverse via conjugation: ifft(y) = conj(fft(conj(y))) / m.
                inner.forward(&mut a);
                let scale = 1.0 / m as f64;
                for ((out, &x), &w) in data.iter_mut().zip(&a).zip(chirp) {
                    *out = x.conj() * scale * w;
                }
            }
        }
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len as f64;
        for x in data.iter_mut() {
            *x = x.conj() * scale;
        }
    }
}

/// Forward transform of a real series.
pub fn fft_real(signal: &[f64]) -> Vec<Complex64> {
    let plan = FftPlan::new(signal.len());
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan.forward(&mut buf);
    buf
}
