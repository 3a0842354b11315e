//! Analytic gradients of the (weighted) cross-entropy loss.

use ndarray::{Array1, Array2, Axis};

use super::model::GcnModel;
use crate::error::{Error, Result};
use crate::graph::NormAdj;

/// Per-layer parameter gradients. Layers below the trainable boundary hold
/// zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .chain(self.biases.iter().flat_map(|b| b.iter().copied()))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Gradients of `weighted_loss_ce` with respect to every parameter outside
/// the model's frozen prefix.
pub fn backward(
    model: &GcnModel,
    adj: &NormAdj,
    features: &Array2<f64>,
    targets: &[usize],
    mask: &[bool],
    node_weights: Option<&[f64]>,
) -> Result<Gradients> {
    backward_from(model, adj, features, targets, mask, node_weights, model.frozen_prefix())
}

/// Like [`backward`] but with an explicit first trainable layer (0 trains
/// everything, as in pre-training).
pub fn backward_from(
    model: &GcnModel,
    adj: &NormAdj,
    features: &Array2<f64>,
    targets: &[usize],
    mask: &[bool],
    node_weights: Option<&[f64]>,
    first_trainable: usize,
) -> Result<Gradients> {
    let n = adj.num_nodes();
    if targets.len() != n || mask.len() != n {
        return Err(Error::Shape(format!(
            "targets ({}) and mask ({}) must have one entry per node ({n})",
            targets.len(),
            mask.len()
        )));
    }
    if let Some(w) = node_weights {
        if w.len() != n {
            return Err(Error::Shape(format!("{} node weights for {n} nodes", w.len())));
        }
        if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Validation("node weights must be finite and non-negative".into()));
        }
    }
    let c = model.num_classes();
    if let Some(&t) = targets.iter().zip(mask).filter(|(_, &m)| m).map(|(t, _)| t).find(|&&t| t >= c) {
        return Err(Error::Validation(format!("target class {t} out of range for {c} classes")));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::Validation("loss mask selects no nodes".into()));
    }

    let trace = model.forward_trace(adj, features)?;
    let probs = &trace.prediction.probs;
    let mut dz = Array2::zeros((n, c));
    for i in (0..n).filter(|&i| mask[i]) {
        let scale = node_weights.map_or(1.0, |w| w[i]) / count as f64;
        if scale == 0.0 {
            continue;
        }
        let mut row = dz.row_mut(i);
        row.assign(&probs.row(i));
        row[targets[i]] -= 1.0;
        row *= scale;
    }

    let mut grads = Gradients::zeros_like(model);
    for l in (first_trainable..model.num_layers()).rev() {
        grads.weights[l] = trace.aggregated[l].t().dot(&dz);
        grads.biases[l] = dz.sum_axis(Axis(0));
        if l > first_trainable {
            // Â is symmetric, so Âᵀ·G = Â·G
            let dh = adj.spmm(dz.dot(&model.weights[l].t()).view());
            let pre = &trace.pre[l - 1];
            dz = dh;
            dz.zip_mut_with(pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::model::{weighted_loss_ce, GcnConfig};
    use crate::graph::{generate_sbm, normalize_adjacency, SbmParams};

    fn instance() -> (GcnModel, NormAdj, Array2<f64>, Vec<usize>, Vec<bool>) {
        let p = SbmParams {
            block_sizes: vec![10, 10],
            p_intra: 0.3,
            p_inter: 0.05,
            class_means: vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, -0.5]],
            noise_std: 0.7,
            degree_spread: 0.0,
        };
        let g = generate_sbm(&p, 3).unwrap();
        let cfg = GcnConfig {
            hidden: 6,
            layers: 2,
            frozen_prefix: 0,
        };
        let model = GcnModel::new(3, 2, &cfg, 8).unwrap();
        let mask = (0..20).map(|i| i % 3 != 0).collect();
        (model, normalize_adjacency(&g), g.features().clone(), g.labels().to_vec(), mask)
    }

    #[test]
    fn zero_node_weights_give_zero_gradient() {
        let (m, a, x, y, mask) = instance();
        let g = backward(&m, &a, &x, &y, &mask, Some(&[0.0; 20])).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gradient_is_linear_in_node_weights() {
        let (m, a, x, y, mask) = instance();
        let w: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let g1 = backward(&m, &a, &x, &y, &mask, Some(&w)).unwrap();
        let g2 = backward(&m, &a, &x, &y, &mask, Some(&w2)).unwrap();
        for (u, v) in g1.iter().zip(g2.iter()) {
            assert!((2.0 * u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn frozen_layers_get_zero_gradient() {
        let (m, a, x, y, mask) = instance();
        let m = GcnModel::from_parts(m.weights.clone(), m.biases.clone(), 1).unwrap();
        let g = backward(&m, &a, &x, &y, &mask, None).unwrap();
        assert!(g.weights[0].iter().all(|&v| v == 0.0));
        assert!(g.biases[0].iter().all(|&v| v == 0.0));
        assert!(g.weights[1].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn matches_central_differences() {
        let (m, a, x, y, mask) = instance();
        let w: Vec<f64> = (0..20).map(|i| 0.5 + 0.05 * i as f64).collect();
        let g = backward(&m, &a, &x, &y, &mask, Some(&w)).unwrap();
        let loss = |model: &GcnModel| {
            let p = model.forward(&a, &x).unwrap();
            weighted_loss_ce(&p, &y, &mask, Some(&w)).unwrap()
        };
        let h = 1e-6;
        for l in 0..m.num_layers() {
            for idx in 0..m.weights[l].len() {
                let (r, c) = (idx / m.weights[l].ncols(), idx % m.weights[l].ncols());
                let mut plus = m.clone();
                plus.weights[l][[r, c]] += h;
                let mut minus = m.clone();
                minus.weights[l][[r, c]] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let an = g.weights[l][[r, c]];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {l} W[{r},{c}]: analytic {an}, numeric {fd}");
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let (m, a, x, y, mask) = instance();
        assert!(backward(&m, &a, &x, &y[..5], &mask, None).is_err());
        assert!(backward(&m, &a, &x, &y, &mask, Some(&[-1.0; 20])).is_err());
    }
}
