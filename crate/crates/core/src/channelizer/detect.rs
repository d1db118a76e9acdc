//! Streaming threshold detector.
//!
//! For processed frame `k` the noise estimate of a bin is the mean power of
//! its 256-bin segment averaged over frames `k-3..=k` (frames 0..=2 use the
//! estimate of frames 0..=3). The single-frame SNR is `P_k / N` and the
//! composite SNR is `(P_{k-1} + P_k + P_{k+1}) / N`, using the neighbours
//! that exist. An event is stamped at frame `k` when both meet their
//! thresholds. Noise is not subtracted.

use std::collections::VecDeque;

use super::FrameSpectrum;
use crate::{Error, Result, SEGMENT_BINS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub snr_single_db: f64,
    pub snr_comp_db: f64,
    pub segment_bins: usize,
    /// Frames averaged in the noise estimate.
    pub noise_frames: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            snr_single_db: 11.0,
            snr_comp_db: 11.8,
            segment_bins: SEGMENT_BINS,
            noise_frames: 4,
        }
    }
}

/// One threshold crossing before site annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: u64,
    pub mjd: f64,
    pub bin: usize,
    pub snr_single_db: f64,
    pub snr_comp_db: f64,
}

/// Noise power per bin for `bin`, from the segment containing it averaged
/// over `history` frames.
pub fn estimate_noise(history: &[&[f32]], bin: usize, segment_bins: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::invalid("noise estimate needs at least one frame"));
    }
    let seg = bin / segment_bins;
    let mut total = 0.0;
    for frame in history {
        let lo = seg * segment_bins;
        let hi = (lo + segment_bins).min(frame.len());
        total += segment_mean(&frame[lo..hi]);
    }
    Ok(total / history.len() as f64)
}

fn segment_mean(bins: &[f32]) -> f64 {
    bins.iter().map(|&p| p as f64).sum::<f64>() / bins.len() as f64
}

/// `(snr_single, snr_comp)` in dB for the stamped-frame power `power` and
/// the composite window powers `window` (which include `power`).
pub fn compute_snr(power: f64, noise: f64, window: &[f64]) -> Result<(f64, f64)> {
    if !(noise > 0.0) {
        return Err(Error::invalid("noise estimate must be positive"));
    }
    let comp: f64 = window.iter().sum();
    Ok((10.0 * (power / noise).log10(), 10.0 * (comp / noise).log10()))
}

/// Consumes frame spectra in processing order and emits detections.
pub struct Detector {
    params: DetectorParams,
    n_bins: usize,
    /// Per-frame segment means, first entry is frame `means_base`.
    means: VecDeque<Vec<f64>>,
    means_base: usize,
    /// Spectra, first entry is frame `spectra_base`.
    spectra: VecDeque<FrameSpectrum>,
    spectra_base: usize,
    received: usize,
    next_eval: usize,
    skipped_bins: u64,
}

impl Detector {
    pub fn new(params: DetectorParams, n_bins: usize) -> Result<Self> {
        if params.segment_bins == 0 || params.noise_frames == 0 {
            return Err(Error::invalid("segment_bins and noise_frames must be positive"));
        }
        if params.snr_single_db.is_nan() || params.snr_comp_db.is_nan() {
            return Err(Error::invalid("thresholds must not be NaN"));
        }
        Ok(Detector {
            params,
            n_bins,
            means: VecDeque::new(),
            means_base: 0,
            spectra: VecDeque::new(),
            spectra_base: 0,
            received: 0,
            next_eval: 0,
            skipped_bins: 0,
        })
    }

    pub fn frames_received(&self) -> usize {
        self.received
    }

    /// Bin evaluations skipped for a nonpositive noise estimate.
    pub fn skipped_bins(&self) -> u64 {
        self.skipped_bins
    }

    pub fn push(&mut self, spectrum: FrameSpectrum, out: &mut Vec<Detection>) -> Result<()> {
        if spectrum.bin_powers.len() != self.n_bins {
            return Err(Error::invalid(format!(
                "spectrum has {} bins, expected {}",
                spectrum.bin_powers.len(),
                self.n_bins
            )));
        }
        let seg = self.params.segment_bins;
        self.means
            .push_back(spectrum.bin_powers.chunks(seg).map(segment_mean).collect());
        self.spectra.push_back(spectrum);
        self.received += 1;
        while self.next_eval + 1 < self.received && self.received >= self.params.noise_frames {
            self.evaluate(self.next_eval, out);
            self.next_eval += 1;
            self.prune();
        }
        Ok(())
    }

    /// Evaluates the frames still waiting on a successor.
    pub fn finish(&mut self, out: &mut Vec<Detection>) {
        if self.received < self.params.noise_frames {
            if self.received > 0 {
                log::info!(
                    "only {} processed frames; at least {} are needed for a noise estimate, no events",
                    self.received,
                    self.params.noise_frames
                );
            }
            return;
        }
        while self.next_eval < self.received {
            self.evaluate(self.next_eval, out);
            self.next_eval += 1;
        }
    }

    fn noise_window_end(&self, j: usize) -> usize {
        j.max(self.params.noise_frames - 1)
    }

    fn prune(&mut self) {
        let j = self.next_eval;
        let keep_means = self.noise_window_end(j) + 1 - self.params.noise_frames;
        while self.means_base < keep_means {
            self.means.pop_front();
            self.means_base += 1;
        }
        let keep_spectra = j.saturating_sub(1);
        while self.spectra_base < keep_spectra {
            self.spectra.pop_front();
            self.spectra_base += 1;
        }
    }

    fn evaluate(&mut self, j: usize, out: &mut Vec<Detection>) {
        let end = self.noise_window_end(j);
        let start = end + 1 - self.params.noise_frames;
        let n_seg = self.means[0].len();
        let mut noise = vec![0.0; n_seg];
        for f in start..=end {
            for (acc, m) in noise.iter_mut().zip(&self.means[f - self.means_base]) {
                *acc += m;
            }
        }
        for v in noise.iter_mut() {
            *v /= self.params.noise_frames as f64;
        }

        let at = |k: usize| &self.spectra[k - self.spectra_base];
        let cur = at(j);
        let prev = (j > 0).then(|| &at(j - 1).bin_powers);
        let next = (j + 1 < self.received).then(|| &at(j + 1).bin_powers);
        let t1 = 10f64.powf(self.params.snr_single_db / 10.0);
        let t2 = 10f64.powf(self.params.snr_comp_db / 10.0);
        let seg_bins = self.params.segment_bins;
        let mut skipped = 0u64;
        for (b, &p) in cur.bin_powers.iter().enumerate() {
            let n = noise[b / seg_bins];
            if !(n > 0.0) {
                skipped += 1;
                continue;
            }
            let p = p as f64;
            // Cheap prefilter, confirmed in dB below.
            if p < t1 * n * (1.0 - 1e-9) {
                continue;
            }
            let comp = p + prev.map_or(0.0, |v| v[b] as f64) + next.map_or(0.0, |v| v[b] as f64);
            if comp < t2 * n * (1.0 - 1e-9) {
                continue;
            }
            let single_db = 10.0 * (p / n).log10();
            let comp_db = 10.0 * (comp / n).log10();
            if single_db >= self.params.snr_single_db && comp_db >= self.params.snr_comp_db {
                out.push(Detection {
                    frame_index: cur.frame_index,
                    mjd: cur.mjd_start,
                    bin: b,
                    snr_single_db: single_db,
                    snr_comp_db: comp_db,
                });
            }
        }
        if skipped > 0 {
            log::debug!("frame {}: {skipped} bins skipped for zero noise estimate", cur.frame_index);
            if self.skipped_bins == 0 {
                log::warn!("nonpositive noise estimate; affected bins are skipped");
            }
            self.skipped_bins += skipped;
        }
    }
}
