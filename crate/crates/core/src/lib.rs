//! Low-SNR covert pulse links built on pulse pileup.
//!
//! A sparse train of signed pulses has a very high peak-to-average power
//! ratio, so a matched receiver can detect each pulse at SNRs far below
//! 0 dB. Before transmission each pulse is smeared by a chain of allpass
//! filters into a long, low-peak chirp; the overlapping chirps pile up into
//! a noise-like waveform with the same power spectrum. The receiver undoes
//! the allpass chain, recovering the impulsive train.
//!
//! Modules, bottom up:
//!
//! * [`signal`]: pulse trains, waveforms, FIR kernels, convolution.
//! * [`shaping`]: RRC/RC seeds, allpass chains, transmit/receive pair.
//! * [`metrics`]: PAPR, TBP ratio, kurtosis, SNR, spectra.
//! * [`channel`]: seeded AWGN and noise calibration.
//! * [`link`]: end-to-end simulation with MPA/MMA synchronization.
//! * [`theory`]: closed-form BER and SNR limits.
//! * [`report`]: config hashing and CSV output.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod link;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod shaping;
pub mod signal;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Waveform64 = signal::Waveform<f64>;
pub type Waveform32 = signal::Waveform<f32>;
pub type FirKernel64 = signal::FirKernel<f64>;
pub type FirKernel32 = signal::FirKernel<f32>;
pub type PulseTrain64 = signal::PulseTrain<f64>;
pub type PulseTrain32 = signal::PulseTrain<f32>;
pub type ShapingPair64 = shaping::ShapingPair<f64>;
pub type ShapingPair32 = shaping::ShapingPair<f32>;
