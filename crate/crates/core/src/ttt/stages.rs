use serde::{Deserialize, Serialize};

use super::filter::FilterConfig;
use super::weight::{gaussian_weight, update_weight_state, GaussianWeightState};
use crate::annotator::AnnotationRecord;
use crate::error::{Error, Result};
use crate::gnn::{backward, weighted_loss_ce, GcnModel, OptimState};
use crate::graph::{drop_edge, normalize_adjacency, Graph, NormAdj};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TttConfig {
    #[serde(default = "default_epochs")]
    pub stage1_epochs: usize,
    #[serde(default = "default_epochs")]
    pub stage2_epochs: usize,
    #[serde(default = "yes")]
    pub stage1: bool,
    #[serde(default = "yes")]
    pub stage2: bool,
    #[serde(default = "default_drop_edge")]
    pub drop_edge: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Stage-2 learning rate; `lr` when unset.
    #[serde(default)]
    pub stage2_lr: Option<f64>,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Root of the selection and edge-dropping streams.
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    30
}
fn yes() -> bool {
    true
}
fn default_drop_edge() -> f64 {
    0.3
}
fn default_lr() -> f64 {
    0.001
}
fn default_momentum() -> f64 {
    0.999
}
fn default_lambda_max() -> f64 {
    1.0
}

impl Default for TttConfig {
    fn default() -> Self {
        TttConfig {
            stage1_epochs: default_epochs(),
            stage2_epochs: default_epochs(),
            stage1: true,
            stage2: true,
            drop_edge: default_drop_edge(),
            lr: default_lr(),
            stage2_lr: None,
            filter: FilterConfig::default(),
            momentum: default_momentum(),
            lambda_max: default_lambda_max(),
            seed: 0,
        }
    }
}

impl TttConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.drop_edge) {
            return Err(Error::Config(format!("drop_edge = {} outside [0, 1)", self.drop_edge)));
        }
        for lr in [Some(self.lr), self.stage2_lr].into_iter().flatten() {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("learning rate {lr} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum = {} outside [0, 1)", self.momentum)));
        }
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return Err(Error::Config(format!("lambda_max = {} must be positive", self.lambda_max)));
        }
        self.filter.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub epochs: usize,
    /// Loss before the last update.
    pub final_loss: Option<f64>,
}

/// Cross-entropy fine-tuning on the pseudo-labels of `annotations`.
pub fn stage1_finetune(
    mut model: GcnModel,
    g: &Graph,
    adj: &NormAdj,
    annotations: &[AnnotationRecord],
    cfg: &TttConfig,
) -> Result<(GcnModel, StageReport)> {
    if annotations.is_empty() {
        return Err(Error::Validation("stage 1 needs at least one annotation".into()));
    }
    let n = g.num_nodes();
    let mut targets = vec![0; n];
    let mut mask = vec![false; n];
    for r in annotations {
        r.validate(model.num_classes())?;
        if r.node_id >= n {
            return Err(Error::Validation(format!("annotated node {} out of range", r.node_id)));
        }
        targets[r.node_id] = r.pseudo_label;
        mask[r.node_id] = true;
    }
    let x = g.features();
    let mut opt = OptimState::adam(cfg.lr);
    let mut final_loss = None;
    for epoch in 1..=cfg.stage1_epochs {
        let pred = model.forward(adj, x)?;
        let loss = weighted_loss_ce(&pred, &targets, &mask, None)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        final_loss = Some(loss);
        let grads = backward(&model, adj, x, &targets, &mask, None)?;
        let first = model.frozen_prefix();
        opt.step(&mut model, &grads, first)?;
    }
    Ok((
        model,
        StageReport {
            epochs: cfg.stage1_epochs,
            final_loss,
        },
    ))
}

/// Weighted self-training on `unlabeled`.
///
/// Every epoch predicts on the intact graph, folds the top-class
/// probabilities of the unlabeled nodes into the weight state, and takes one
/// step on the cross-entropy between the prediction on an edge-dropped copy
/// of the graph and the intact argmax, each node weighted by its
/// truncated-Gaussian weight.
pub fn stage2_selftrain(
    mut model: GcnModel,
    g: &Graph,
    adj: &NormAdj,
    unlabeled: &[bool],
    cfg: &TttConfig,
    mut state: GaussianWeightState,
) -> Result<(GcnModel, GaussianWeightState, StageReport)> {
    let n = g.num_nodes();
    if unlabeled.len() != n {
        return Err(Error::Shape("unlabeled mask must cover every node".into()));
    }
    let ids: Vec<usize> = (0..n).filter(|&i| unlabeled[i]).collect();
    if ids.is_empty() {
        return Err(Error::Validation("stage 2 needs unlabeled nodes".into()));
    }
    let x = g.features();
    let stream = seed::substream(cfg.seed, seed::DROPEDGE);
    let mut opt = OptimState::adam(cfg.stage2_lr.unwrap_or(cfg.lr));
    let mut final_loss = None;
    let mut weights = vec![0.0; n];

    for epoch in 1..=cfg.stage2_epochs {
        let pred = model.forward(adj, x)?;
        let targets = pred.argmax();
        let p_max = pred.max_probs();
        let batch: Vec<f64> = ids.iter().map(|&i| p_max[i]).collect();
        state = update_weight_state(&state, &batch)?;
        for &i in &ids {
            weights[i] = gaussian_weight(p_max[i], &state);
        }

        let augmented = drop_edge(g, cfg.drop_edge, seed::indexed(stream, epoch as u64))?;
        let aug_adj = normalize_adjacency(&augmented);
        let aug_pred = model.forward(&aug_adj, x)?;
        let loss = weighted_loss_ce(&aug_pred, &targets, unlabeled, Some(&weights))?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        final_loss = Some(loss);
        let grads = backward(&model, &aug_adj, x, &targets, unlabeled, Some(&weights))?;
        let first = model.frozen_prefix();
        opt.step(&mut model, &grads, first)?;
    }
    Ok((
        model,
        state,
        StageReport {
            epochs: cfg.stage2_epochs,
            final_loss,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::Provenance;
    use crate::gnn::GcnConfig;
    use ndarray::Array2;

    fn fixture() -> (Graph, NormAdj, GcnModel) {
        let n = 12;
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).chain([(0, 6), (3, 9)]).collect();
        let f = Array2::from_shape_fn((n, 3), |(i, j)| ((i * 5 + j * 7) % 11) as f64 / 11.0 - 0.4);
        let labels = (0..n).map(|i| i % 3).collect();
        let g = Graph::from_edges(f, labels, 3, &edges, None).unwrap();
        let adj = normalize_adjacency(&g);
        let cfg = GcnConfig {
            hidden: 8,
            layers: 2,
            frozen_prefix: 1,
        };
        let model = GcnModel::new(3, 3, &cfg, 5).unwrap();
        (g, adj, model)
    }

    fn rec(node_id: usize, pseudo_label: usize) -> AnnotationRecord {
        AnnotationRecord {
            node_id,
            pseudo_label,
            confidence: 90.0,
            provenance: Provenance::Oracle,
            raw_response: None,
            retries: 0,
            fallback: false,
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (g, adj, model) = fixture();
        let cfg = TttConfig {
            stage1_epochs: 0,
            stage2_epochs: 0,
            ..Default::default()
        };
        let (m1, _) = stage1_finetune(model.clone(), &g, &adj, &[rec(0, 1)], &cfg).unwrap();
        assert_eq!(m1, model);
        let st = GaussianWeightState::new(3, 0.9, 1.0).unwrap();
        let (m2, st2, _) = stage2_selftrain(model.clone(), &g, &adj, &[true; 12], &cfg, st).unwrap();
        assert_eq!(m2, model);
        assert_eq!(st2, st);
    }

    #[test]
    fn overfits_one_node_and_keeps_frozen_layer() {
        let (g, adj, model) = fixture();
        let before = model.forward(&adj, g.features()).unwrap().argmax()[4];
        let target = (before + 1) % 3;
        let cfg = TttConfig {
            stage1_epochs: 300,
            lr: 0.05,
            ..Default::default()
        };
        let (tuned, report) = stage1_finetune(model.clone(), &g, &adj, &[rec(4, target)], &cfg).unwrap();
        assert_eq!(tuned.forward(&adj, g.features()).unwrap().argmax()[4], target);
        assert_eq!(tuned.layer_weights()[0], model.layer_weights()[0]);
        assert_eq!(tuned.layer_biases()[0], model.layer_biases()[0]);
        assert!(report.final_loss.is_some());
        assert!(stage1_finetune(model, &g, &adj, &[], &cfg).is_err());
    }

    #[test]
    fn zero_weights_leave_model_unchanged() {
        let (g, adj, model) = fixture();
        let cfg = TttConfig {
            stage2_epochs: 5,
            lr: 0.1,
            ..Default::default()
        };
        let st = GaussianWeightState {
            mu: 1.0,
            sigma2: 1e-12,
            momentum: 0.999_999,
            lambda_max: 1.0,
            num_classes: 3,
        };
        let (m, _, report) = stage2_selftrain(model.clone(), &g, &adj, &[true; 12], &cfg, st).unwrap();
        assert_eq!(report.final_loss, Some(0.0));
        assert_eq!(m, model);
    }

    #[test]
    fn stage2_keeps_frozen_layer_and_is_deterministic() {
        let (g, adj, model) = fixture();
        let cfg = TttConfig {
            stage2_epochs: 10,
            lr: 0.01,
            seed: 3,
            ..Default::default()
        };
        let st = GaussianWeightState::new(3, 0.9, 1.0).unwrap();
        let mask: Vec<bool> = (0..12).map(|i| i % 4 != 0).collect();
        let (a, sa, _) = stage2_selftrain(model.clone(), &g, &adj, &mask, &cfg, st).unwrap();
        let (b, sb, _) = stage2_selftrain(model.clone(), &g, &adj, &mask, &cfg, st).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert_ne!(a, model);
        assert_eq!(a.layer_weights()[0], model.layer_weights()[0]);
        assert!(stage2_selftrain(model, &g, &adj, &[false; 12], &cfg, st).is_err());
    }
}
