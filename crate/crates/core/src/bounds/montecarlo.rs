//! Monte Carlo check of the Hoeffding bound on the weighted empirical error.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_simplex, weight_ratio};
use crate::error::{Error, Result};
use crate::seed;

pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub omega: [f64; 2],
    pub lambda: [f64; 2],
    /// Total labeled samples; domain 0 gets `round(lambda0 * n)`.
    pub n: usize,
    /// Deviation threshold.
    pub eps: f64,
    pub trials: usize,
    /// True per-domain error rates of the fixed hypothesis.
    #[serde(default = "default_rates")]
    pub true_rates: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

fn default_rates() -> [f64; 2] {
    [0.2, 0.35]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub violation_rate: f64,
    /// `2 exp(-2 N eps^2 / sum_j omega_j^2 / lambda_j)`, unclamped.
    pub analytic_bound: f64,
    /// One binomial standard deviation of the rate at the analytic bound.
    pub sigma: f64,
    pub trials: usize,
}

/// `2 exp(-2 n eps^2 / sum_j omega_j^2 / lambda_j)`.
pub fn hoeffding_bound(omega: [f64; 2], lambda: [f64; 2], n: usize, eps: f64) -> Result<f64> {
    let ratio = weight_ratio(omega, lambda)?;
    if ratio == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * (-2.0 * n as f64 * eps * eps / ratio).exp())
}

/// Fraction of trials where `|e_omega - e_hat_omega| >= eps`.
pub fn lemma2_montecarlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    check_simplex("omega", cfg.omega)?;
    check_simplex("lambda", cfg.lambda)?;
    if cfg.trials < MIN_TRIALS {
        return Err(Error::Validation(format!("trials = {} below {MIN_TRIALS}", cfg.trials)));
    }
    if !(cfg.eps.is_finite() && cfg.eps >= 0.0) {
        return Err(Error::Validation(format!("eps = {} must be non-negative", cfg.eps)));
    }
    if cfg.true_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Validation(format!("true rates {:?} outside [0, 1]", cfg.true_rates)));
    }
    let n0 = (cfg.lambda[0] * cfg.n as f64).round() as u64;
    let counts = [n0, cfg.n as u64 - n0.min(cfg.n as u64)];
    for j in 0..2 {
        if counts[j] == 0 && cfg.omega[j] != 0.0 {
            return Err(Error::Validation(format!("domain {j} has weight but no samples")));
        }
    }
    let analytic_bound = hoeffding_bound(cfg.omega, cfg.lambda, cfg.n, cfg.eps)?;
    let expected: f64 = (0..2).map(|j| cfg.omega[j] * cfg.true_rates[j]).sum();
    let dists = (0..2)
        .map(|j| Binomial::new(counts[j], cfg.true_rates[j]).map_err(|e| Error::Validation(e.to_string())))
        .collect::<Result<Vec<_>>>()?;

    let stream = seed::substream(cfg.seed, "lemma2");
    let violations: usize = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::indexed(stream, t as u64));
            let empirical: f64 = (0..2)
                .filter(|&j| counts[j] > 0)
                .map(|j| cfg.omega[j] * dists[j].sample(&mut rng) as f64 / counts[j] as f64)
                .sum();
            usize::from((empirical - expected).abs() >= cfg.eps)
        })
        .sum();

    let p = analytic_bound.min(1.0);
    Ok(MonteCarloReport {
        violation_rate: violations as f64 / cfg.trials as f64,
        analytic_bound,
        sigma: (p * (1.0 - p) / cfg.trials as f64).sqrt(),
        trials: cfg.trials,
    })
}
