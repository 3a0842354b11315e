use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::seed;

/// Stochastic block model with Gaussian node features.
///
/// Block `b` holds `block_sizes[b]` nodes labelled `b`. Each node's features
/// are `class_means[b]` plus isotropic noise with standard deviation
/// `noise_std`.
///
/// With `degree_spread > 0` the model is degree-corrected: node `u` gets a
/// propensity `theta_u = exp(spread * z_u)`, `z_u ~ N(0, 1)`, rescaled to mean 1
/// within its block, and edge `(u, v)` appears with probability
/// `min(1, theta_u * theta_v * p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_intra: f64,
    pub p_inter: f64,
    pub class_means: Vec<Vec<f64>>,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default)]
    pub degree_spread: f64,
}

fn default_noise_std() -> f64 {
    0.5
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::Validation("every block needs at least one node".into()));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        if self.class_means.len() != self.block_sizes.len() {
            return Err(Error::Validation(format!(
                "{} class means for {} blocks",
                self.class_means.len(),
                self.block_sizes.len()
            )));
        }
        let dim = self.class_means[0].len();
        if dim == 0 || self.class_means.iter().any(|m| m.len() != dim) {
            return Err(Error::Validation(
                "class means must be non-empty and share one dimension".into(),
            ));
        }
        if !(self.degree_spread >= 0.0 && self.degree_spread.is_finite()) {
            return Err(Error::Validation(format!("degree_spread = {} is invalid", self.degree_spread)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Validation(format!("noise_std = {} is invalid", self.noise_std)));
        }
        Ok(())
    }
}

pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<Graph> {
    params.validate()?;
    let mut rng = seed::rng(seed);
    let labels: Vec<usize> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();

    let mut theta = vec![1.0; n];
    if params.degree_spread > 0.0 {
        let z = Normal::new(0.0, params.degree_spread)
            .map_err(|e| Error::Validation(format!("degree distribution: {e}")))?;
        for t in theta.iter_mut() {
            *t = z.sample(&mut rng).exp();
        }
        let mut start = 0;
        for &size in &params.block_sizes {
            let block = &mut theta[start..start + size];
            let mean = block.iter().sum::<f64>() / size as f64;
            block.iter_mut().for_each(|t| *t /= mean);
            start += size;
        }
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] {
                params.p_intra
            } else {
                params.p_inter
            };
            if rng.random::<f64>() < (theta[u] * theta[v] * p).min(1.0) {
                edges.push((u, v));
            }
        }
    }

    let dim = params.class_means[0].len();
    let noise = Normal::new(0.0, params.noise_std)
        .map_err(|e| Error::Validation(format!("noise distribution: {e}")))?;
    let mut features = Array2::zeros((n, dim));
    for (i, &y) in labels.iter().enumerate() {
        for k in 0..dim {
            features[[i, k]] = params.class_means[y][k] + noise.sample(&mut rng);
        }
    }
    Graph::from_edges(features, labels, params.block_sizes.len(), &edges, None)
}
