//! Narrowband Δt Δf pulse-pair discovery pipeline.
//!
//! The crate covers the full chain from synthetic IQ capture to AWGN-model
//! likelihoods:
//!
//! - [`synth`]: AWGN plus amplitude-boosted sinusoidal burst elements per polarization channel.
//! - [`iq`]: the 8-bit interleaved IQ capture file format.
//! - [`channelizer`]: 0.27 s FFT frames, noise estimation, SNR thresholding and event files.
//! - [`sky`]: MJD to right ascension and Earth-rotation Doppler compensation.
//! - [`rfi`]: machine RFI excision (persistent, dynamic IIR, harmonic, static band) with audits.
//! - [`pairs`]: two-file Δt Δf coincidence, anchors and associated pulse pairs.
//! - [`stats`]: Ricean/Rayleigh ratio, Poisson Δt Δf likelihoods, binomial Methods A and B,
//!   RA event probability and Bayesian posterior chaining.
//! - [`config`]: the reproducible run configuration embedded in every output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channelizer;
pub mod config;
pub mod error;
pub mod events;
pub mod iq;
pub mod pairs;
pub mod report;
pub mod rfi;
pub mod sky;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// FFT frame duration (matched filter integration time) in seconds.
pub const FRAME_SECONDS: f64 = 0.27;

/// Number of contiguous FFT bins in one noise / RFI segment (labelled "954 Hz").
pub const SEGMENT_BINS: usize = 256;

/// Seconds per day, for MJD arithmetic.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Number of FFT bins (and samples) in one frame at `sample_rate`.
pub fn frame_len(sample_rate: f64) -> usize {
    (sample_rate * FRAME_SECONDS).round() as usize
}
