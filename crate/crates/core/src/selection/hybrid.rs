use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::baseline::{baseline_select, BaselineKind};
use super::featprop::featprop_scores;
use super::pagerank::pagerank_scores;
use crate::error::{Error, Result};
use crate::gnn::{prediction_entropy, Prediction};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    /// Annotation budget `B`.
    pub budget: usize,
    /// Step-1 pool is the `ceil(beta * B)` most uncertain test nodes.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Weight of the featprop term in the composite score.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_hops")]
    pub hops: usize,
    #[serde(default)]
    pub strategy: SelectionStrategy,
}

/// Which selector [`select_nodes`] runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SelectionStrategy {
    #[default]
    Hybrid,
    Baseline(BaselineKind),
}

impl SelectionStrategy {
    /// Hybrid first, then every baseline.
    pub fn all() -> Vec<SelectionStrategy> {
        std::iter::once(SelectionStrategy::Hybrid)
            .chain(BaselineKind::ALL.map(SelectionStrategy::Baseline))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            SelectionStrategy::Hybrid => "hybrid",
            SelectionStrategy::Baseline(k) => k.name(),
        }
    }
}

impl TryFrom<String> for SelectionStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s == "hybrid" {
            Ok(SelectionStrategy::Hybrid)
        } else {
            s.parse().map(SelectionStrategy::Baseline)
        }
    }
}

impl From<SelectionStrategy> for String {
    fn from(s: SelectionStrategy) -> String {
        s.name().to_string()
    }
}

fn default_beta() -> f64 {
    2.0
}
fn default_alpha() -> f64 {
    1.0
}
fn default_damping() -> f64 {
    0.85
}
fn default_tol() -> f64 {
    1e-8
}
fn default_hops() -> usize {
    2
}

impl SelectionConfig {
    pub fn with_budget(budget: usize) -> Self {
        SelectionConfig {
            budget,
            beta: default_beta(),
            alpha: default_alpha(),
            damping: default_damping(),
            tol: default_tol(),
            hops: default_hops(),
            strategy: SelectionStrategy::Hybrid,
        }
    }

    /// `ceil(beta * B)`, robust to representation error in `beta`.
    pub fn pool_size(&self) -> usize {
        ((self.beta * self.budget as f64) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, test_size: usize) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("selection budget must be at least 1".into()));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta = {} must be at least 1", self.beta)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha = {} must be non-negative", self.alpha)));
        }
        if self.budget > test_size {
            return Err(Error::Config(format!(
                "budget {} exceeds the {test_size} test nodes",
                self.budget
            )));
        }
        if self.pool_size() > test_size {
            return Err(Error::Config(format!(
                "candidate pool ceil(beta * B) = {} exceeds the {test_size} test nodes",
                self.pool_size()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected nodes, best composite score first.
    pub chosen: Vec<usize>,
    /// Prediction entropy of every node.
    #[serde(rename = "Q")]
    pub uncertainty: Vec<f64>,
    /// Step-1 candidate pool, most uncertain first.
    pub pool: Vec<usize>,
    /// Composite score of each pool node (aligned with `pool`).
    #[serde(rename = "F")]
    pub composite: Vec<f64>,
    pub config: SelectionConfig,
}

impl SelectionResult {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }
}

/// Descending by score, ascending node id on ties.
pub(crate) fn rank_desc(ids: &mut [usize], score: impl Fn(usize) -> f64) {
    ids.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
}

/// Two-step hybrid selection.
///
/// 1. Keep the `ceil(beta * B)` test nodes with the highest prediction
///    entropy.
/// 2. Score each pool node by `pr(v)/max_pool(pr) + alpha * featprop(v)`
///    (featprop over the pool with `B` centroids) and keep the top `B`.
///    Ties keep the step-1 order.
pub fn hybrid_select(
    g: &Graph,
    pred: &Prediction,
    test_mask: &[bool],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SelectionResult> {
    let n = g.num_nodes();
    if pred.num_nodes() != n || test_mask.len() != n {
        return Err(Error::Shape("prediction and test mask must cover every node".into()));
    }
    let mut test: Vec<usize> = (0..n).filter(|&i| test_mask[i]).collect();
    cfg.validate(test.len())?;

    let uncertainty = prediction_entropy(pred);
    rank_desc(&mut test, |i| uncertainty[i]);
    let pool: Vec<usize> = test[..cfg.pool_size()].to_vec();

    let pagerank = pagerank_scores(g, cfg.damping, cfg.tol)?;
    let pr_max = pool.iter().map(|&v| pagerank[v]).fold(0.0, f64::max);
    let featprop = featprop_scores(g, &pool, cfg.hops, cfg.budget, seed)?;
    let composite: Vec<f64> = pool
        .iter()
        .zip(&featprop)
        .map(|(&v, &fp)| pagerank[v] / pr_max + cfg.alpha * fp)
        .collect();

    let mut order: Vec<usize> = (0..pool.len()).collect();
    // stable: equal composite scores keep their uncertainty rank
    order.sort_by(|&a, &b| composite[b].total_cmp(&composite[a]).then(a.cmp(&b)));
    let chosen = order[..cfg.budget].iter().map(|&k| pool[k]).collect();

    Ok(SelectionResult {
        chosen,
        uncertainty,
        pool,
        composite,
        config: cfg.clone(),
    })
}

/// Runs the configured strategy and returns the chosen nodes.
pub fn select_nodes(
    g: &Graph,
    pred: &Prediction,
    test_mask: &[bool],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<Vec<usize>> {
    match cfg.strategy {
        SelectionStrategy::Hybrid => hybrid_select(g, pred, test_mask, cfg, seed).map(|r| r.chosen),
        SelectionStrategy::Baseline(kind) => baseline_select(kind, g, pred, test_mask, cfg.budget, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let f = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        Graph::from_edges(f, vec![0; n], 1, &edges, None).unwrap()
    }

    fn pred(n: usize) -> Prediction {
        Prediction::from_logits(Array2::from_shape_fn((n, 3), |(i, c)| ((i * 13 + c * 5) % 11) as f64 * 0.3))
    }

    #[test]
    fn full_budget_returns_whole_test_set() {
        let g = cycle(10);
        let mask: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let mut cfg = SelectionConfig::with_budget(5);
        cfg.beta = 1.0;
        let r = hybrid_select(&g, &pred(10), &mask, &cfg, 0).unwrap();
        let mut chosen = r.chosen.clone();
        chosen.sort();
        assert_eq!(chosen, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn alpha_zero_on_cycle_is_entropy_selection() {
        let g = cycle(12);
        let p = pred(12);
        let mask = vec![true; 12];
        let mut cfg = SelectionConfig::with_budget(3);
        cfg.alpha = 0.0;
        cfg.tol = 1e-14;
        let r = hybrid_select(&g, &p, &mask, &cfg, 0).unwrap();
        let mut by_entropy: Vec<usize> = (0..12).collect();
        let q = prediction_entropy(&p);
        rank_desc(&mut by_entropy, |i| q[i]);
        let mut expected = by_entropy[..3].to_vec();
        expected.sort();
        let mut got = r.chosen.clone();
        got.sort();
        assert_eq!(got, expected);
        assert!(r.chosen.iter().all(|c| r.pool.contains(c)));
        assert_eq!(r.pool.len(), 6);
    }

    #[test]
    fn budget_larger_than_test_set() {
        let g = cycle(6);
        let mask = vec![true, true, false, false, false, false];
        assert!(hybrid_select(&g, &pred(6), &mask, &SelectionConfig::with_budget(3), 0).is_err());
        assert!(hybrid_select(&g, &pred(6), &mask, &SelectionConfig::with_budget(0), 0).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SelectionStrategy::all() {
            assert_eq!(SelectionStrategy::try_from(String::from(s)).unwrap(), s);
        }
        assert!(SelectionStrategy::try_from("best".to_string()).is_err());
        let cfg: SelectionConfig = serde_json::from_str(r#"{"budget": 3, "strategy": "degree"}"#).unwrap();
        assert_eq!(cfg.strategy, SelectionStrategy::Baseline(BaselineKind::Degree));
    }

    #[test]
    fn baseline_strategy_dispatch() {
        let g = cycle(10);
        let mut cfg = SelectionConfig::with_budget(3);
        cfg.strategy = SelectionStrategy::Baseline(BaselineKind::Random);
        let a = select_nodes(&g, &pred(10), &[true; 10], &cfg, 9).unwrap();
        let b = baseline_select(BaselineKind::Random, &g, &pred(10), &[true; 10], 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn result_json_keys() {
        let g = cycle(8);
        let r = hybrid_select(&g, &pred(8), &[true; 8], &SelectionConfig::with_budget(2), 4).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["chosen", "Q", "F", "config", "pool"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
