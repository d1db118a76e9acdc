//! Binomial densities and tails in the log domain.

use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Largest `n` for which the binomial coefficient is formed directly.
const DIRECT_LIMIT: u64 = 1000;

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if n <= DIRECT_LIMIT {
        // C(1000, 500) ~ 2.7e299 still fits in an f64.
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c.ln()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// `ln [p^k (1-p)^(n-k)]` with the `0 ln 0 = 0` convention.
fn ln_bernoulli_run(n: u64, k: u64, p: f64) -> f64 {
    let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let b = if n == k { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    a + b
}

/// Binomial density `C(n, k) p^k (1-p)^(n-k)`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    (ln_choose(n, k) + ln_bernoulli_run(n, k, p)).exp()
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Upper tail `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ln = log_sum_exp((k..=n).map(|x| ln_choose(n, x) + ln_bernoulli_run(n, x, p)));
    ln.exp().min(1.0)
}

/// Cumulative likelihood of `n_df` or more associated pulse pairs in `n`
/// trials, each with probability `alpha_h` under AWGN.
pub fn method_a(alpha_h: f64, n: u64, n_df: u64) -> Result<f64> {
    if !(alpha_h > 0.0 && alpha_h <= 1.0) {
        return Err(Error::invalid(format!("alpha_h must be in (0, 1], got {alpha_h}")));
    }
    if n_df > n {
        return Err(Error::invalid(format!("N_df = {n_df} exceeds trial count n = {n}")));
    }
    Ok(binomial_upper_tail(n, n_df, alpha_h))
}
