//! SNR-ranked binomial density likelihood across RA windows.
//!
//! Pairs are ranked by decreasing SNR. For the top `t` pairs, `k` of which
//! fall in a window of event probability `p`, the window's likelihood is
//! the binomial density `C(t, k) p^k (1-p)^(t-k)`. A decrease of the curve at
//! a rank where the window gains a pair marks a pair that is less likely
//! under AWGN than the one before.

use statrs::function::gamma::gamma_ur;

use super::binomial::binomial_pmf;
use super::ra::RaWindow;

/// One ranked pulse pair as seen by Method B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    pub snr_max: f64,
    pub mjd: f64,
    pub ra_hours: f64,
}

/// Sorts by decreasing SNR, then earlier MJD, then lower RA.
pub fn rank_pairs(pairs: &mut [RankedPair]) {
    pairs.sort_by(|a, b| {
        b.snr_max
            .total_cmp(&a.snr_max)
            .then(a.mjd.total_cmp(&b.mjd))
            .then(a.ra_hours.total_cmp(&b.ra_hours))
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowCurve {
    pub window: RaWindow,
    pub probability: f64,
    /// `likelihood[t - 1]` is `L(t)` for `t = 1..=trials`.
    pub likelihood: Vec<f64>,
    /// Cumulative in-window count at each rank.
    pub counts: Vec<u64>,
    /// Ranks `t` at which the window gained the `t`-th pair and `L` fell.
    pub discontinuities: Vec<usize>,
}

impl WindowCurve {
    pub fn min(&self) -> Option<(usize, f64)> {
        self.likelihood
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &l)| match best {
                Some((_, b)) if b <= l => best,
                _ => Some((i + 1, l)),
            })
    }
}

/// Likelihood curves for pairs already ranked by [`rank_pairs`].
pub fn method_b(ranked: &[RankedPair], windows: &[(RaWindow, f64)]) -> Vec<WindowCurve> {
    windows
        .iter()
        .map(|&(window, p)| {
            let mut k = 0u64;
            let mut prev = 1.0;
            let mut likelihood = Vec::with_capacity(ranked.len());
            let mut counts = Vec::with_capacity(ranked.len());
            let mut discontinuities = Vec::new();
            for (i, pair) in ranked.iter().enumerate() {
                let t = i as u64 + 1;
                let gained = window.contains(pair.ra_hours);
                if gained {
                    k += 1;
                }
                let l = binomial_pmf(t, k, p);
                if gained && l < prev {
                    discontinuities.push(t as usize);
                }
                prev = l;
                likelihood.push(l);
                counts.push(k);
            }
            WindowCurve {
                window,
                probability: p,
                likelihood,
                counts,
                discontinuities,
            }
        })
        .collect()
}

/// Friedman rank test of exchangeability across windows. `minima[r][w]` is
/// the minimum likelihood of window `w` in run `r`; returns the p-value.
pub fn friedman_test(minima: &[Vec<f64>]) -> f64 {
    let n = minima.len();
    if n == 0 {
        return 1.0;
    }
    let k = minima[0].len();
    if k < 2 {
        return 1.0;
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_correction = 0.0;
    for row in minima {
        let ranks = average_ranks(row);
        for (s, r) in rank_sums.iter_mut().zip(&ranks) {
            *s += r;
        }
        tie_correction += tie_term(row);
    }
    let (nf, kf) = (n as f64, k as f64);
    let expected = nf * (kf + 1.0) / 2.0;
    let ss: f64 = rank_sums.iter().map(|r| (r - expected).powi(2)).sum();
    let mut q = 12.0 * ss / (nf * kf * (kf + 1.0));
    let denom = 1.0 - tie_correction / (nf * (kf * kf * kf - kf));
    if denom > 0.0 {
        q /= denom;
    } else {
        return 1.0;
    }
    gamma_ur((kf - 1.0) / 2.0, q / 2.0)
}

fn average_ranks(row: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && row[idx[j + 1]] == row[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &m in &idx[i..=j] {
            ranks[m] = r;
        }
        i = j + 1;
    }
    ranks
}

fn tie_term(row: &[f64]) -> f64 {
    let mut v = row.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(snr: f64, ra: f64) -> RankedPair {
        RankedPair {
            snr_max: snr,
            mjd: 58000.0,
            ra_hours: ra,
        }
    }

    #[test]
    fn certain_window_is_flat() {
        let ranked: Vec<_> = (0..20).map(|i| pair(20.0 - i as f64, 5.2)).collect();
        let curves = method_b(&ranked, &[(RaWindow::new(0.0, 24.0 - 1e-9), 1.0)]);
        assert!(curves[0].likelihood.iter().all(|&l| l == 1.0));
        assert!(curves[0].discontinuities.is_empty());
    }

    #[test]
    fn empty_window_is_zero_count_density() {
        let ranked: Vec<_> = (0..10).map(|i| pair(20.0 - i as f64, 1.0)).collect();
        let c = &method_b(&ranked, &[(RaWindow::new(5.1, 5.4), 0.075)])[0];
        for (i, &l) in c.likelihood.iter().enumerate() {
            assert!((l - 0.925f64.powi(i as i32 + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn hand_computed_curve() {
        // In-window at ranks 1 and 3.
        let ranked = vec![pair(15.0, 5.2), pair(14.0, 1.0), pair(13.0, 5.3)];
        let c = &method_b(&ranked, &[(RaWindow::new(5.1, 5.4), 0.1)])[0];
        let want = [0.1, 2.0 * 0.1 * 0.9, 3.0 * 0.01 * 0.9];
        for (l, w) in c.likelihood.iter().zip(want) {
            assert!((l - w).abs() < 1e-15);
        }
        assert_eq!(c.counts, vec![1, 1, 2]);
        // Rank 1: 0.1 < 1; rank 3: 0.027 < 0.18.
        assert_eq!(c.discontinuities, vec![1, 3]);
        assert_eq!(c.min(), Some((3, c.likelihood[2])));
    }

    #[test]
    fn ranking_order() {
        let mut v = vec![
            RankedPair { snr_max: 12.0, mjd: 2.0, ra_hours: 1.0 },
            RankedPair { snr_max: 13.0, mjd: 3.0, ra_hours: 1.0 },
            RankedPair { snr_max: 12.0, mjd: 1.0, ra_hours: 1.0 },
        ];
        rank_pairs(&mut v);
        assert_eq!(v.iter().map(|p| p.mjd).collect::<Vec<_>>(), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn friedman_detects_a_biased_column() {
        let runs: Vec<Vec<f64>> = (0..30).map(|i| vec![0.1 + i as f64 * 1e-3, 0.5, 0.6, 0.7, 0.8]).collect();
        assert!(friedman_test(&runs) < 1e-6);
        let tied: Vec<Vec<f64>> = (0..30).map(|_| vec![0.5; 5]).collect();
        assert_eq!(friedman_test(&tied), 1.0);
    }
}
