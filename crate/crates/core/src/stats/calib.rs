//! Empirical and analytic median interarrival frequency of threshold events.
//!
//! The empirical estimate takes, for every event, the distance up in
//! frequency to the next event of the same frame, wrapping around the
//! receiver band. For a Poisson process of density `lambda` per Hz that
//! distance is `Exp(lambda)` truncated at the bandwidth (a lone event meets
//! itself after one full turn), so its median is `ln 2 / lambda` whenever
//! that is below the bandwidth.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::events::EventFile;
use crate::{Error, Result};

/// Fewest events accepted for an empirical estimate.
pub const MIN_CALIBRATION_EVENTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Df50Calibration {
    pub empirical: f64,
    pub analytic: f64,
    pub events: usize,
    pub frames: u64,
    pub bandwidth: f64,
}

impl Df50Calibration {
    /// Empirical over analytic.
    pub fn agreement(&self) -> f64 {
        self.empirical / self.analytic
    }
}

/// `ln 2 / lambda` with `lambda = events / (frames * bandwidth)`.
pub fn analytic_df50(events: usize, frames: u64, bandwidth: f64) -> f64 {
    LN_2 * frames as f64 * bandwidth / events as f64
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-event distances to the next higher event in the same frame.
fn upward_gaps(frames: &[Vec<f64>], bandwidth: f64, out: &mut Vec<f64>) {
    for freqs in frames {
        let mut f = freqs.clone();
        f.sort_by(f64::total_cmp);
        let n = f.len();
        for i in 0..n {
            let gap = if n == 1 {
                bandwidth
            } else if i + 1 < n {
                f[i + 1] - f[i]
            } else {
                f[0] + bandwidth - f[i]
            };
            out.push(gap);
        }
    }
}

/// Calibration from per-frame event frequencies. Every processed frame must
/// be present, including frames without events.
pub fn calibrate_df50(frames: &[Vec<f64>], bandwidth: f64) -> Result<Df50Calibration> {
    let mut gaps = Vec::new();
    upward_gaps(frames, bandwidth, &mut gaps);
    finish(gaps, frames.len() as u64, bandwidth)
}

fn finish(mut gaps: Vec<f64>, frames: u64, bandwidth: f64) -> Result<Df50Calibration> {
    let events = gaps.len();
    if events < MIN_CALIBRATION_EVENTS {
        return Err(Error::invalid(format!(
            "df50 calibration needs at least {MIN_CALIBRATION_EVENTS} events, found {events}"
        )));
    }
    Ok(Df50Calibration {
        empirical: median(&mut gaps),
        analytic: analytic_df50(events, frames, bandwidth),
        events,
        frames,
        bandwidth,
    })
}

/// Calibration over detected event files. Frames without events are taken
/// from each file's processed frame count.
pub fn calibrate_df50_files(files: &[EventFile]) -> Result<Df50Calibration> {
    let Some(first) = files.first() else {
        return Err(Error::invalid("no event files for df50 calibration"));
    };
    let (lo, hi) = first.header.band();
    let bandwidth = hi - lo;
    let mut gaps = Vec::new();
    let mut frames = 0u64;
    for file in files {
        let (l, h) = file.header.band();
        if ((h - l) - bandwidth).abs() > 1e-6 * bandwidth {
            return Err(Error::Incompatible("event files have different receiver bandwidths".into()));
        }
        frames += file.header.frames;
        let mut by_frame: BTreeMap<(String, String, i64), Vec<f64>> = BTreeMap::new();
        for e in &file.events {
            by_frame
                .entry((e.site_id.clone(), e.polarization.clone(), e.mjd_key()))
                .or_default()
                .push(e.rf_freq);
        }
        let groups: Vec<Vec<f64>> = by_frame.into_values().collect();
        upward_gaps(&groups, bandwidth, &mut gaps);
    }
    finish(gaps, frames, bandwidth)
}

/// Frames of a homogeneous Poisson process of `lambda` events per Hz over
/// `[0, bandwidth)`.
pub fn uniform_poisson_frames(lambda: f64, bandwidth: f64, frames: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = lambda * bandwidth;
    let poisson = Poisson::new(mean).expect("positive Poisson mean");
    (0..frames)
        .map(|_| {
            let n = poisson.sample(&mut rng) as usize;
            (0..n).map(|_| rng.random_range(0.0..bandwidth)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_matches_analytic() {
        let bandwidth = 62.5e6;
        let lambda = 30.0 / bandwidth;
        let frames = uniform_poisson_frames(lambda, bandwidth, 2000, 5);
        let c = calibrate_df50(&frames, bandwidth).unwrap();
        // Relative sd of the median is about 1.44 / sqrt(60000) = 0.6%.
        assert!((c.agreement() - 1.0).abs() < 0.03, "{c:?}");
        assert!((c.analytic / (LN_2 / lambda) - 1.0).abs() < 0.03);
    }

    #[test]
    fn doubling_density_halves_median() {
        let bandwidth = 10e6;
        let a = calibrate_df50(&uniform_poisson_frames(2e-6, bandwidth, 2000, 1), bandwidth).unwrap();
        let b = calibrate_df50(&uniform_poisson_frames(4e-6, bandwidth, 2000, 2), bandwidth).unwrap();
        assert!((a.empirical / b.empirical - 2.0).abs() < 0.1);
    }

    #[test]
    fn sparse_frames_are_not_biased() {
        // Most frames hold zero or one event; lone events count as one turn.
        let bandwidth = 1e6;
        let lambda = 1.2 / bandwidth;
        let c = calibrate_df50(&uniform_poisson_frames(lambda, bandwidth, 40_000, 3), bandwidth).unwrap();
        assert!((c.agreement() - 1.0).abs() < 0.03, "{c:?}");
    }

    #[test]
    fn too_few_events_rejected() {
        assert!(calibrate_df50(&[vec![1.0, 2.0]], 10.0).is_err());
    }
}
