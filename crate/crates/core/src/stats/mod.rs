//! Detection statistics, interarrival likelihoods and model inference.

pub mod bayes;
pub mod binomial;
pub mod calib;
pub mod mc;
pub mod method_b;
pub mod poisson;
pub mod ra;
pub mod rice;
pub mod threshold;

pub use bayes::{bayes_update, round_sig, ChainStep, Model, PosteriorChain};
pub use binomial::{binomial_pmf, binomial_upper_tail, method_a};
pub use calib::{calibrate_df50, calibrate_df50_files, Df50Calibration};
pub use mc::{exponential_rate_oracle, RateEstimate};
pub use method_b::{friedman_test, method_b, rank_pairs, RankedPair, WindowCurve};
pub use poisson::{p0_df_awgn, p_dtdf_awgn, p_dtdf_awgn_small, PoissonCalib, DEFAULT_DF50_HZ};
pub use ra::{ra_probability, RaMode, RaWindow};
pub use rice::{bessel_i0, ln_bessel_i0, rice_rayleigh_ratio};
pub use threshold::{awgn_event_probability, expected_event_snr_comp_db};
