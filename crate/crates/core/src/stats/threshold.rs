//! Threshold-crossing statistics of AWGN bins.
//!
//! With the noise estimate taken as exact, a bin's power in units of the
//! noise is `Exp(1)`, and the composite over `m` frames is the stamped
//! frame's power plus an independent `Gamma(m - 1, 1)` term.

fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Probability that one AWGN bin-frame meets both thresholds, with a
/// composite summed over `frames` frames.
pub fn awgn_event_probability(single_db: f64, comp_db: f64, frames: u32) -> f64 {
    let t1 = db_to_ratio(single_db);
    let t2 = db_to_ratio(comp_db);
    if frames <= 1 {
        return (-t1.max(t2)).exp();
    }
    if t2 <= t1 {
        // The composite is at least the single-frame power.
        return (-t1).exp();
    }
    let k = frames - 1;
    let d = t2 - t1;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=k {
        term *= d / j as f64;
        sum += term;
    }
    (-t2).exp() * sum
}

/// Density of the composite power `s` jointly with the event condition:
/// `e^-s (s - t1)^k / k!` for `s >= max(t1, t2)`.
fn event_density(s: f64, t1: f64, k: u32) -> f64 {
    let mut v = (-s).exp();
    let x = s - t1;
    for j in 1..=k {
        v *= x / j as f64;
    }
    v
}

/// Mean composite SNR (dB) of AWGN events, by Simpson quadrature.
pub fn expected_event_snr_comp_db(single_db: f64, comp_db: f64, frames: u32) -> f64 {
    let t1 = db_to_ratio(single_db);
    let t2 = db_to_ratio(comp_db);
    let k = frames.saturating_sub(1);
    let lo = t1.max(t2);
    let hi = lo + 80.0;
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let mut mass = 0.0;
    let mut moment = 0.0;
    for i in 0..=n {
        let s = lo + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = event_density(s, t1, k);
        mass += w * f;
        moment += w * f * 10.0 * s.log10();
    }
    moment / mass
}
