use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, BudgetLedger, Provenance};
use crate::error::{Error, Result};
use crate::seed;

/// Simulated annotator: ground truth with a fixed fraction of labels flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Target accuracy `a`.
    pub accuracy: f64,
    /// Confidence range for correct labels.
    #[serde(default = "default_correct")]
    pub correct_range: [f64; 2],
    /// Confidence range for flipped labels.
    #[serde(default = "default_wrong")]
    pub wrong_range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

fn default_correct() -> [f64; 2] {
    [70.0, 100.0]
}
fn default_wrong() -> [f64; 2] {
    [40.0, 90.0]
}

impl OracleConfig {
    pub fn new(accuracy: f64, seed: u64) -> Self {
        OracleConfig {
            accuracy,
            correct_range: default_correct(),
            wrong_range: default_wrong(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::Config(format!("oracle accuracy {} outside [0, 1]", self.accuracy)));
        }
        for (name, [lo, hi]) in [("correct_range", self.correct_range), ("wrong_range", self.wrong_range)] {
            if !(0.0 <= lo && lo <= hi && hi <= 100.0) {
                return Err(Error::Config(format!("{name} [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 100")));
            }
        }
        Ok(())
    }
}

/// Number of flipped labels among `n`: `(1 - a) * n` rounded to nearest.
pub fn perturbed_count(accuracy: f64, n: usize) -> usize {
    ((1.0 - accuracy) * n as f64).round() as usize
}

fn draw(rng: &mut seed::Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Annotate `nodes` from the true labels (indexed by node id). The budget is
/// checked before anything is drawn.
pub fn annotate_oracle(
    nodes: &[usize],
    labels: &[usize],
    num_classes: usize,
    cfg: &OracleConfig,
    ledger: &BudgetLedger,
) -> Result<Vec<AnnotationRecord>> {
    cfg.validate()?;
    if let Some(&bad) = nodes.iter().find(|&&v| v >= labels.len()) {
        return Err(Error::Validation(format!("node {bad} has no label")));
    }
    let flips = perturbed_count(cfg.accuracy, nodes.len());
    if flips > 0 && num_classes < 2 {
        return Err(Error::Config("cannot flip labels with fewer than two classes".into()));
    }
    ledger.try_reserve(nodes.len())?;

    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.shuffle(&mut rng);
    let mut flipped = vec![false; nodes.len()];
    for &k in &order[..flips] {
        flipped[k] = true;
    }

    Ok(nodes
        .iter()
        .zip(flipped)
        .map(|(&v, flip)| {
            let truth = labels[v];
            let (label, confidence) = if flip {
                let mut wrong = rng.random_range(0..num_classes - 1);
                if wrong >= truth {
                    wrong += 1;
                }
                (wrong, draw(&mut rng, cfg.wrong_range))
            } else {
                (truth, draw(&mut rng, cfg.correct_range))
            };
            AnnotationRecord {
                node_id: v,
                pseudo_label: label,
                confidence,
                provenance: Provenance::Oracle,
                raw_response: None,
                retries: 0,
                fallback: false,
            }
        })
        .collect())
}
