//! Truncated-Gaussian sample weights for self-training.
//!
//! A node whose top-class probability reaches the running mean `mu` gets the
//! full weight `lambda_max`; below the mean the weight decays as a Gaussian
//! with the running variance. Mean and variance follow an exponential moving
//! average of per-batch statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWeightState {
    pub mu: f64,
    pub sigma2: f64,
    pub momentum: f64,
    pub lambda_max: f64,
    pub num_classes: usize,
}

impl GaussianWeightState {
    /// Starts at `mu = 1/C`, `sigma2 = 1`.
    pub fn new(num_classes: usize, momentum: f64, lambda_max: f64) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Validation("weight state needs at least one class".into()));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!("momentum {momentum} outside [0, 1)")));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Config(format!("lambda_max {lambda_max} must be positive")));
        }
        Ok(GaussianWeightState {
            mu: 1.0 / num_classes as f64,
            sigma2: 1.0,
            momentum,
            lambda_max,
            num_classes,
        })
    }
}

pub fn gaussian_weight(p_max: f64, st: &GaussianWeightState) -> f64 {
    if p_max < st.mu {
        let d = p_max - st.mu;
        st.lambda_max * (-d * d / (2.0 * st.sigma2)).exp()
    } else {
        st.lambda_max
    }
}

/// Fold one batch of top-class probabilities into the moving averages. The
/// batch variance gets the `n/(n-1)` correction.
pub fn update_weight_state(st: &GaussianWeightState, batch: &[f64]) -> Result<GaussianWeightState> {
    let n = batch.len();
    if n < 2 {
        return Err(Error::Validation(format!("weight update needs a batch of at least 2, got {n}")));
    }
    let mean = batch.iter().sum::<f64>() / n as f64;
    let var = batch.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n as f64;
    let m = st.momentum;
    Ok(GaussianWeightState {
        mu: m * st.mu + (1.0 - m) * mean,
        sigma2: m * st.sigma2 + (1.0 - m) * var * n as f64 / (n - 1) as f64,
        ..*st
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(mu: f64, sigma2: f64) -> GaussianWeightState {
        GaussianWeightState {
            mu,
            sigma2,
            momentum: 0.999,
            lambda_max: 1.0,
            num_classes: 2,
        }
    }

    #[test]
    fn weight_branches() {
        let st = state(0.8, 0.01);
        assert_eq!(gaussian_weight(0.8, &st), 1.0);
        assert_eq!(gaussian_weight(0.95, &st), 1.0);
        assert!((gaussian_weight(0.7, &st) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((gaussian_weight(0.8 - 1e-12, &st) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ema_step() {
        let st = GaussianWeightState::new(2, 0.999, 1.0).unwrap();
        assert_eq!((st.mu, st.sigma2), (0.5, 1.0));
        let next = update_weight_state(&st, &[0.9, 0.9, 0.9]).unwrap();
        assert!((next.mu - 0.5004).abs() < 1e-12);
        assert!((next.sigma2 - 0.999).abs() < 1e-12);
    }

    #[test]
    fn zero_momentum_is_batch_statistics() {
        let st = GaussianWeightState::new(3, 0.0, 2.0).unwrap();
        let next = update_weight_state(&st, &[0.2, 0.4, 0.9]).unwrap();
        assert!((next.mu - 0.5).abs() < 1e-12);
        // unbiased sample variance of (0.2, 0.4, 0.9)
        assert!((next.sigma2 - 0.13).abs() < 1e-12);
        assert!(update_weight_state(&st, &[0.5]).is_err());
    }

    #[test]
    fn invalid_state() {
        assert!(GaussianWeightState::new(2, 1.0, 1.0).is_err());
        assert!(GaussianWeightState::new(2, 0.5, 0.0).is_err());
    }
}
