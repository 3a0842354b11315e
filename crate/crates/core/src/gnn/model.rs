use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormAdj;
use crate::seed;

/// Architecture of a GCN classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcnConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Number of graph-convolution layers (2 or 3 in practice).
    #[serde(default = "default_layers")]
    pub layers: usize,
    /// Leading layers left untouched during test-time adaptation.
    #[serde(default = "default_frozen")]
    pub frozen_prefix: usize,
}

fn default_hidden() -> usize {
    64
}
fn default_layers() -> usize {
    2
}
fn default_frozen() -> usize {
    1
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            hidden: default_hidden(),
            layers: default_layers(),
            frozen_prefix: default_frozen(),
        }
    }
}

/// A stack of graph convolutions `H_{l+1} = ReLU(Â H_l W_l + b_l)`; the last
/// layer has no activation and yields the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
    frozen_prefix: usize,
}

impl GcnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(in_dim: usize, num_classes: usize, cfg: &GcnConfig, seed: u64) -> Result<Self> {
        if cfg.layers == 0 {
            return Err(Error::Config("a GCN needs at least one layer".into()));
        }
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat_n(cfg.hidden, cfg.layers - 1));
        dims.push(num_classes);
        let mut rng = seed::rng(seed);
        let weights = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..=limit))
            })
            .collect();
        let biases = dims[1..].iter().map(|&d| Array1::zeros(d)).collect();
        Self::from_parts(weights, biases, cfg.frozen_prefix)
    }

    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>, frozen_prefix: usize) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape(format!(
                "{} weight matrices and {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..weights.len() {
            if biases[l].len() != weights[l].ncols() {
                return Err(Error::Shape(format!("layer {l}: bias length does not match width")));
            }
            if l > 0 && weights[l - 1].ncols() != weights[l].nrows() {
                return Err(Error::Shape(format!("layer {l}: input width does not match previous layer")));
            }
        }
        if frozen_prefix >= weights.len() {
            return Err(Error::Config(format!(
                "frozen prefix {frozen_prefix} must be below the layer count {}",
                weights.len()
            )));
        }
        Ok(GcnModel {
            weights,
            biases,
            frozen_prefix,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn frozen_prefix(&self) -> usize {
        self.frozen_prefix
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights[self.weights.len() - 1].ncols()
    }

    /// `[in_dim, hidden..., num_classes]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.weights.iter().map(|w| w.ncols()));
        d
    }

    pub fn layer_weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn layer_biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub(crate) fn check_input(&self, adj: &NormAdj, features: &Array2<f64>) -> Result<()> {
        if features.ncols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.in_dim(),
                features.ncols()
            )));
        }
        if features.nrows() != adj.num_nodes() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} nodes",
                features.nrows(),
                adj.num_nodes()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, adj: &NormAdj, features: &Array2<f64>) -> Result<Trace> {
        self.check_input(adj, features)?;
        let last = self.num_layers() - 1;
        let mut aggregated = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut h = features.clone();
        for l in 0..self.num_layers() {
            let ah = adj.spmm(h.view());
            let mut z = ah.dot(&self.weights[l]);
            z += &self.biases[l];
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
            h = if l < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
            aggregated.push(ah);
            pre.push(z);
        }
        let logits = pre[last].clone();
        Ok(Trace {
            aggregated,
            pre,
            prediction: Prediction::from_logits(logits),
        })
    }

    pub fn forward(&self, adj: &NormAdj, features: &Array2<f64>) -> Result<Prediction> {
        Ok(self.forward_trace(adj, features)?.prediction)
    }
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct Trace {
    /// `Â H_l` per layer.
    pub aggregated: Vec<Array2<f64>>,
    /// `Â H_l W_l + b_l` per layer.
    pub pre: Vec<Array2<f64>>,
    pub prediction: Prediction,
}

/// Class distribution per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
}

impl Prediction {
    pub fn from_logits(logits: Array2<f64>) -> Self {
        let mut probs = logits.clone();
        for mut row in probs.axis_iter_mut(Axis(0)) {
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        Prediction { logits, probs }
    }

    pub fn num_nodes(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.ncols()
    }

    /// Most likely class per node; ties go to the lowest class index.
    pub fn argmax(&self) -> Vec<usize> {
        self.probs
            .axis_iter(Axis(0))
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &p)| if p > best.1 { (c, p) } else { best })
                    .0
            })
            .collect()
    }

    /// `max_c p(y = c | x_i)` per node.
    pub fn max_probs(&self) -> Vec<f64> {
        self.probs
            .axis_iter(Axis(0))
            .map(|row| row.fold(0.0f64, |a, &b| a.max(b)))
            .collect()
    }

    /// Fraction of masked nodes whose argmax equals the label.
    pub fn accuracy(&self, labels: &[usize], mask: &[bool]) -> f64 {
        let pred = self.argmax();
        let (mut hit, mut total) = (0usize, 0usize);
        for i in 0..pred.len() {
            if mask[i] {
                total += 1;
                hit += usize::from(pred[i] == labels[i]);
            }
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }
}

/// Shannon entropy (natural log) of every row, with `0 ln 0 = 0`.
pub fn prediction_entropy(pred: &Prediction) -> Vec<f64> {
    pred.probs
        .axis_iter(Axis(0))
        .map(|row| {
            -row.iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * p.ln())
                .sum::<f64>()
        })
        .collect()
}

fn masked_count(mask: &[bool]) -> Result<usize> {
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        return Err(Error::Validation("loss mask selects no nodes".into()));
    }
    Ok(n)
}

/// Mean cross-entropy over masked nodes.
pub fn loss_ce(pred: &Prediction, labels: &[usize], mask: &[bool]) -> Result<f64> {
    weighted_loss_ce(pred, labels, mask, None)
}

/// `(1/|mask|) Σ_{i ∈ mask} w_i · (−ln p_i[y_i])`, computed from the logits
/// via log-sum-exp.
pub fn weighted_loss_ce(pred: &Prediction, labels: &[usize], mask: &[bool], weights: Option<&[f64]>) -> Result<f64> {
    let n = pred.num_nodes();
    if labels.len() != n || mask.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::Shape("labels, mask and weights must cover every node".into()));
    }
    let count = masked_count(mask)?;
    let mut total = 0.0;
    for i in (0..n).filter(|&i| mask[i]) {
        let row = pred.logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let w = weights.map_or(1.0, |w| w[i]);
        total += w * (lse - row[labels[i]]);
    }
    Ok(total / count as f64)
}
