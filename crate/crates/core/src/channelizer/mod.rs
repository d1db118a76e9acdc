//! FFT channelization, noise estimation and threshold detection.
//!
//! Each processed frame of `N = round(fs * 0.27)` samples becomes `N` bins of
//! 3.7 Hz in ascending frequency order. Bin power is `|X|^2 / N^2`, so a
//! tone of amplitude `a` centred on a bin has power `a^2` and complex AWGN of
//! per-quadrature `sigma` has expected bin power `2 sigma^2 / N`, the noise
//! power in one bin width.

mod detect;
mod pipeline;

use std::sync::Arc;

use num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

pub use detect::{compute_snr, estimate_noise, Detection, Detector, DetectorParams};
pub use pipeline::{
    annotate, event_files, run_detection, DetectionRun, FrameSource, IqFrameSource, StreamInfo, SynthFrameSource,
};

use crate::{Error, Result, SECONDS_PER_DAY};

/// Processes one frame out of every `period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DutyCycle {
    period: u64,
}

impl DutyCycle {
    pub const FULL: DutyCycle = DutyCycle { period: 1 };

    /// Accepts fractions whose reciprocal is within 0.01 of an integer
    /// period, e.g. 1.0, 0.33 and 0.25.
    pub fn from_fraction(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!("duty cycle {fraction} outside (0, 1]")));
        }
        let period = (1.0 / fraction).round() as u64;
        if (1.0 / period as f64 - fraction).abs() > 0.01 {
            return Err(Error::invalid(format!(
                "duty cycle {fraction} is not one frame in an integer period"
            )));
        }
        Ok(DutyCycle { period })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn fraction(&self) -> f64 {
        1.0 / self.period as f64
    }

    pub fn processes(&self, frame_index: u64) -> bool {
        frame_index.is_multiple_of(self.period)
    }
}

/// Bin powers of one processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectrum {
    /// Frame index in the raw stream, counting unprocessed frames.
    pub frame_index: u64,
    pub mjd_start: f64,
    pub bin_powers: Vec<f32>,
}

/// MJD at the start of frame `frame_index`.
pub fn frame_mjd(start_mjd: f64, frame_index: u64, frame_len: usize, sample_rate: f64) -> f64 {
    start_mjd + frame_index as f64 * frame_len as f64 / sample_rate / SECONDS_PER_DAY
}

/// Baseband frequency of frequency-ordered bin `bin`.
pub fn bin_baseband_freq(bin: usize, frame_len: usize, sample_rate: f64) -> f64 {
    (bin as f64 - (frame_len / 2) as f64) * sample_rate / frame_len as f64
}

/// Frequency-ordered bin holding baseband frequency `freq` (nearest).
pub fn freq_to_bin(freq: f64, frame_len: usize, sample_rate: f64) -> usize {
    let b = (freq * frame_len as f64 / sample_rate).round() as i64 + (frame_len / 2) as i64;
    b.clamp(0, frame_len as i64 - 1) as usize
}

/// Rectangular-window power spectrometer for one frame length.
pub struct Spectrometer {
    fft: Arc<dyn Fft<f32>>,
    len: usize,
    buf: Vec<Complex32>,
    scratch: Vec<Complex32>,
}

impl Spectrometer {
    pub fn new(frame_len: usize) -> Self {
        let fft = FftPlanner::<f32>::new().plan_fft_forward(frame_len);
        let scratch = vec![Complex32::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Spectrometer {
            fft,
            len: frame_len,
            buf: Vec::with_capacity(frame_len),
            scratch,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.len
    }

    /// Frequency-ordered bin powers of `samples` (exactly one frame).
    pub fn power(&mut self, samples: &[Complex32]) -> Result<Vec<f32>> {
        if samples.len() != self.len {
            return Err(Error::invalid(format!(
                "frame has {} samples, expected {}",
                samples.len(),
                self.len
            )));
        }
        self.buf.clear();
        self.buf.extend_from_slice(samples);
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let n = self.len;
        let half = n / 2;
        let norm = 1.0 / (n as f64 * n as f64);
        let mut out = Vec::with_capacity(n);
        for b in 0..n {
            let idx = (b + n - half) % n;
            out.push((self.buf[idx].norm_sqr() as f64 * norm) as f32);
        }
        Ok(out)
    }
}

/// Sequential channelization of whole frames.
pub fn channelize(
    frames: impl IntoIterator<Item = (u64, Vec<Complex32>)>,
    frame_len: usize,
    duty: DutyCycle,
    start_mjd: f64,
    sample_rate: f64,
) -> impl Iterator<Item = Result<FrameSpectrum>> {
    let mut spec = Spectrometer::new(frame_len);
    frames
        .into_iter()
        .filter(move |(k, _)| duty.processes(*k))
        .map(move |(k, samples)| {
            Ok(FrameSpectrum {
                frame_index: k,
                mjd_start: frame_mjd(start_mjd, k, frame_len, sample_rate),
                bin_powers: spec.power(&samples)?,
            })
        })
}
