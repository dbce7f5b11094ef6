//! Phase-based vibration measurement from video.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the numerical side of the
//! pipeline:
//!
//! 1. [`filter`] builds the G2/H2 quadrature pair and computes local amplitude and phase.
//! 2. [`displacement`] turns temporal phase changes into sub-pixel velocity and displacement.
//! 3. [`features`] finds Harris corners inside a region of interest.
//! 4. [`multipoint`] measures every feature point, aggregates neighbours with a weight
//!    kernel and builds the dominant-frequency map.
//! 5. [`spectral`] provides spectra, SNR-ranked mode picking, NRMSE and resampling.
//! 6. [`band`] selects an amplification band per region, magnifies motion within it
//!    and extracts operating deflection shapes.
//!
//! [`synth`] renders analytic test scenes with exactly known sub-pixel motion.
//!
//! Enable the `parallel` feature to spread frame and pixel work over rayon. Output is
//! bit-identical to the serial path.

#![no_std]
// Range checks are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod band;
pub mod displacement;
pub mod error;
pub mod features;
pub mod fft;
pub mod filter;
pub mod frame;
pub mod multipoint;
pub mod spectral;
pub mod synth;

mod par;

pub use error::{Error, Result};
pub use frame::{Frame, FrameSequence, Point, RgbImage};
