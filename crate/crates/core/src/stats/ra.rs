//! Probability that a pulse pair falls in an RA window.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// RA interval in hours; `low > high` wraps through 0 h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaWindow {
    pub low: f64,
    pub high: f64,
}

impl RaWindow {
    pub fn new(low: f64, high: f64) -> Self {
        RaWindow { low, high }
    }

    pub fn width(&self) -> f64 {
        (self.high - self.low).rem_euclid(24.0)
    }

    pub fn contains(&self, ra: f64) -> bool {
        let ra = ra.rem_euclid(24.0);
        if self.low <= self.high {
            self.low <= ra && ra < self.high
        } else {
            ra >= self.low || ra < self.high
        }
    }

    /// `count` adjacent windows of `width` hours centred on `center`.
    pub fn tiled(center: f64, width: f64, count: usize) -> Vec<RaWindow> {
        let start = center - width * count as f64 / 2.0;
        (0..count)
            .map(|i| {
                let lo = start + i as f64 * width;
                RaWindow::new(lo.rem_euclid(24.0), (lo + width).rem_euclid(24.0))
            })
            .collect()
    }
}

/// How a window event probability is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum RaMode {
    /// Window width over the effective observed RA range (hours).
    Theoretical { ra_obs: f64 },
    /// Fraction of a reference pair population falling in the window.
    Empirical { ras: Vec<f64> },
}

pub fn ra_probability(window: &RaWindow, mode: &RaMode) -> Result<f64> {
    match mode {
        RaMode::Theoretical { ra_obs } => {
            if !(*ra_obs > 0.0) {
                return Err(Error::invalid("observed RA range must be positive"));
            }
            Ok((window.width() / ra_obs).min(1.0))
        }
        RaMode::Empirical { ras } => {
            if ras.is_empty() {
                return Err(Error::invalid("empirical RA probability needs at least one pair"));
            }
            let count = ras.iter().filter(|&&r| window.contains(r)).count();
            Ok(empirical_ra_probability(count as u64, ras.len() as u64))
        }
    }
}

pub fn empirical_ra_probability(window_count: u64, total: u64) -> f64 {
    window_count as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theoretical_central_window() {
        let w = RaWindow::new(5.1, 5.4);
        let p = ra_probability(&w, &RaMode::Theoretical { ra_obs: 4.0 }).unwrap();
        assert!((p - 0.075).abs() < 1e-15);
        let zero = RaWindow::new(5.0, 5.0);
        assert_eq!(ra_probability(&zero, &RaMode::Theoretical { ra_obs: 4.0 }).unwrap(), 0.0);
    }

    #[test]
    fn empirical_is_division() {
        let counts = [13u64, 13, 15, 14, 13];
        let want = [0.065, 0.065, 0.075, 0.070, 0.065];
        for (c, w) in counts.iter().zip(want) {
            assert_eq!(empirical_ra_probability(*c, 200), *c as f64 / 200.0);
            assert!((empirical_ra_probability(*c, 200) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn tiles_cover_the_default_range() {
        let w = RaWindow::tiled(5.25, 0.3, 5);
        assert!((w[0].low - 4.5).abs() < 1e-12 && (w[4].high - 6.0).abs() < 1e-12);
        assert!(w[2].contains(5.2) && !w[2].contains(5.4));
        let wrap = RaWindow::new(23.9, 0.2);
        assert!(wrap.contains(0.1) && wrap.contains(23.95) && !wrap.contains(1.0));
        assert!((wrap.width() - 0.3).abs() < 1e-12);
    }
}
