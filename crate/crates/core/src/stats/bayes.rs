//! Posterior chaining of model likelihoods across observations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Candidate explanations of an observation. Only AWGN has a likelihood
/// function; the others are labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Awgn,
    Rfi,
    Eti,
}

impl Model {
    pub fn has_likelihood(self) -> bool {
        matches!(self, Model::Awgn)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Awgn => "awgn",
            Model::Rfi => "rfi",
            Model::Eti => "eti",
        })
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be in (0, 1], got {v}")))
    }
}

/// `likelihood * prior / p_data`.
pub fn bayes_update(prior: f64, likelihood: f64, p_data: f64) -> Result<f64> {
    check_unit("prior", prior)?;
    check_unit("likelihood", likelihood)?;
    check_unit("p_data", p_data)?;
    Ok(likelihood * prior / p_data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub label: String,
    pub likelihood: f64,
    pub p_data: f64,
    pub prior: f64,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub model: Model,
    pub steps: Vec<ChainStep>,
    initial_prior: f64,
}

impl PosteriorChain {
    pub fn new(model: Model, initial_prior: f64) -> Result<Self> {
        if !model.has_likelihood() {
            return Err(Error::invalid(format!("no likelihood function for model {model}")));
        }
        check_unit("prior", initial_prior)?;
        Ok(PosteriorChain {
            model,
            steps: Vec::new(),
            initial_prior,
        })
    }

    /// Prior for the next observation: the last posterior.
    pub fn current(&self) -> f64 {
        self.steps.last().map_or(self.initial_prior, |s| s.posterior)
    }

    pub fn update(&mut self, label: &str, likelihood: f64, p_data: f64) -> Result<f64> {
        let prior = self.current();
        let posterior = bayes_update(prior, likelihood, p_data)?;
        self.steps.push(ChainStep {
            label: label.to_string(),
            likelihood,
            p_data,
            prior,
            posterior,
        });
        Ok(posterior)
    }
}

/// `x` rounded to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let p = digits - 1 - e;
    if p >= 0 {
        let scale = 10f64.powi(p);
        (x * scale).round() / scale
    } else {
        let scale = 10f64.powi(-p);
        (x / scale).round() * scale
    }
}

/// Interval of values that round to `x` at `digits` significant figures.
pub fn rounding_interval(x: f64, digits: i32) -> (f64, f64) {
    let e = x.abs().log10().floor() as i32;
    let half = 0.5 * 10f64.powi(e - digits + 1);
    (x - half, x + half)
}

/// Whether a product quoted as `quoted` is consistent with factors that
/// were themselves quoted at `digits` significant figures.
pub fn product_consistent(a: f64, b: f64, quoted: f64, digits: i32) -> bool {
    let (a0, a1) = rounding_interval(a, digits);
    let (b0, b1) = rounding_interval(b, digits);
    let (q0, q1) = rounding_interval(quoted, digits);
    let lo = a0 * b0;
    let hi = a1 * b1;
    lo < q1 && hi > q0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_replay() {
        let mut chain = PosteriorChain::new(Model::Awgn, 1.0).unwrap();
        let p1 = chain.update("first anomaly", 0.0140, 1.0).unwrap();
        assert_eq!(round_sig(p1, 2), 0.014);
        let p2 = chain.update("second anomaly", 0.00023, 1.0).unwrap();
        assert_eq!(round_sig(p2, 2), 3.2e-6);
        assert_eq!(chain.steps[1].prior, chain.steps[0].posterior);
    }

    #[test]
    fn rfi_adjusted_branch() {
        let b1 = bayes_update(0.0140, 0.0060, 1.0).unwrap();
        // Plain rounding gives 8.4e-5; the quoted 8.5e-5 lies within the
        // rounding uncertainty of the quoted factors.
        assert_eq!(round_sig(b1, 2), 8.4e-5);
        assert!(product_consistent(0.0140, 0.0060, 8.5e-5, 2));
        let b2 = bayes_update(8.5e-5, 0.1293, 1.0).unwrap();
        assert_eq!(round_sig(b2, 2), 1.1e-5);
    }

    #[test]
    fn inconsistent_product_detected() {
        assert!(!product_consistent(0.0140, 0.0060, 9.5e-5, 2));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(bayes_update(0.0, 0.5, 1.0).is_err());
        assert!(bayes_update(0.5, 1.5, 1.0).is_err());
        assert!(PosteriorChain::new(Model::Rfi, 1.0).is_err());
    }

    #[test]
    fn significant_figures() {
        assert_eq!(round_sig(0.013_96, 2), 0.014);
        assert_eq!(round_sig(1.0991e-5, 2), 1.1e-5);
        let (lo, hi) = rounding_interval(8.5e-5, 2);
        assert!((lo - 8.45e-5).abs() < 1e-18 && (hi - 8.55e-5).abs() < 1e-18);
    }
}
