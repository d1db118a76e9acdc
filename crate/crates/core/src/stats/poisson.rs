//! Poisson interarrival likelihoods of threshold events under AWGN.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Full-scale median interarrival frequency used when no calibration is
/// available, Hz.
pub const DEFAULT_DF50_HZ: f64 = 0.85e6;

/// Median interarrival time and frequency of AWGN threshold events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCalib {
    pub dt50: f64,
    pub df50: f64,
}

impl PoissonCalib {
    pub fn new(dt50: f64, df50: f64) -> Result<Self> {
        if !(dt50 > 0.0 && df50 > 0.0) {
            return Err(Error::invalid("dt50 and df50 must be positive"));
        }
        Ok(PoissonCalib { dt50, df50 })
    }
}

/// Probability of at least one event within `x` of the last under a Poisson
/// process whose interarrival median is `median`.
fn nonzero_count_probability(x: f64, median: f64) -> f64 {
    -(-LN_2 * x / median).exp_m1()
}

/// Probability of a nonzero number of events within `dt` and `df`.
pub fn p_dtdf_awgn(dt: f64, df: f64, calib: &PoissonCalib) -> f64 {
    nonzero_count_probability(dt.abs(), calib.dt50) * nonzero_count_probability(df.abs(), calib.df50)
}

/// First-order form of [`p_dtdf_awgn`], valid for `dt << dt50`, `df << df50`.
pub fn p_dtdf_awgn_small(dt: f64, df: f64, calib: &PoissonCalib) -> f64 {
    LN_2 * LN_2 * dt.abs() * df.abs() / (calib.dt50 * calib.df50)
}

/// Probability of a `delta_t = 0` pair at frequency separation `|df|`.
/// Values above 1 are clamped with a warning.
pub fn p0_df_awgn(df: f64, df50: f64) -> f64 {
    let p = LN_2 * df.abs() / df50;
    if p > 1.0 {
        log::warn!("p0 for |df| = {} Hz exceeds 1 at df50 = {df50} Hz; clamped", df.abs());
        1.0
    } else {
        p
    }
}

/// Largest `|df|` that passes an association gate `p0 < gate`.
pub fn p0_gate_df(gate: f64, df50: f64) -> f64 {
    gate * df50 / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn medians_give_one_quarter() {
        let c = PoissonCalib::new(2.0, 1e5).unwrap();
        assert!((p_dtdf_awgn(2.0, 1e5, &c) - 0.25).abs() < 1e-15);
        assert_eq!(p_dtdf_awgn(0.0, 1e5, &c), 0.0);
        assert_eq!(p_dtdf_awgn(2.0, 0.0, &c), 0.0);
    }

    #[test]
    fn small_argument_form() {
        let c = PoissonCalib::new(1.0, 1.0).unwrap();
        let exact = p_dtdf_awgn(0.01, 0.01, &c);
        let approx = p_dtdf_awgn_small(0.01, 0.01, &c);
        assert!((approx - LN_2 * LN_2 * 1e-4).abs() < 1e-18);
        assert!((exact / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn p0_values() {
        assert_eq!(p0_df_awgn(0.0, DEFAULT_DF50_HZ), 0.0);
        assert!((p0_df_awgn(DEFAULT_DF50_HZ, DEFAULT_DF50_HZ) - LN_2).abs() < 1e-15);
        assert_eq!(p0_df_awgn(2.0 * DEFAULT_DF50_HZ, DEFAULT_DF50_HZ), 1.0);
        assert!((p0_gate_df(0.03, DEFAULT_DF50_HZ) - 36_788.72).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn exact_bounded_by_first_order(dt in 0.0f64..10.0, df in 0.0f64..10.0, m1 in 0.1f64..10.0, m2 in 0.1f64..10.0) {
            let c = PoissonCalib::new(m1, m2).unwrap();
            prop_assert!(p_dtdf_awgn(dt, df, &c) <= p_dtdf_awgn_small(dt, df, &c) * (1.0 + 1e-12) + 1e-300);
        }

        // At a tenth of the medians the first-order form is already 6.7% high;
        // one percent holds out to about 1/70 of each median.
        #[test]
        fn first_order_within_one_percent(u in 0.0f64..0.0144, v in 0.0f64..0.0144) {
            prop_assume!(u > 1e-9 && v > 1e-9);
            let c = PoissonCalib::new(1.0, 1.0).unwrap();
            let r = p_dtdf_awgn(u, v, &c) / p_dtdf_awgn_small(u, v, &c);
            prop_assert!(r <= 1.0 + 1e-12 && r > 0.99 - 1e-12, "{}", r);
        }
    }
}
